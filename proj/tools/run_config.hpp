#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "mixqnm/evolution.hpp"
#include "mixqnm/volterra.hpp"

namespace mixqnm::cli {

inline constexpr const char* version = "0.3.0";

// Regime request: empty means classify, "hierarchy" lets the classifier pick the sub-branch.
struct RegimeRequest {
    std::string name = "auto";
};

struct RunConfig {
    SpectralModel model;
    ModeParams params;
    RegimeRequest regime;
    InitialState initial = InitialState::vacuum();
    std::optional<double> t_max; // empty = auto
    int n_points = 401;
    double omega_max = 0.0;      // kernels table; 0 = 3 max(omega)
    OracleConfig oracle;
    std::string format = "csv";
    std::string path;
    std::string hash;            // of the canonical config text
};

// Throws ConfigError with a stable code for every rejection.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

Regime resolve_regime(const RunConfig& cfg, const std::string& override_name = "");

// FNV-1a over the bytes, rendered as 16 hex digits
std::string fnv1a_hex(const std::string& s);

} // namespace mixqnm::cli
