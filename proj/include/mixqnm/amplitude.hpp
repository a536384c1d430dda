#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mixqnm/kernels.hpp"

namespace mixqnm {

enum class Regime { non_degenerate, nearly_degenerate, hierarchy_g1sq, hierarchy_g1g2 };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);
inline bool is_hierarchy(Regime r) { return r == Regime::hierarchy_g1sq || r == Regime::hierarchy_g1g2; }

enum class ModeLabel { a1, a2, a1dag, a2dag };
std::string to_string(ModeLabel l);

struct QnmMode {
    ModeLabel label = ModeLabel::a1;
    cplx pole{};
    Mat2c residue = Mat2c::Zero();
};

// Omega^2, D, Delta^2 of the 2x2 characteristic problem at one frequency.
struct PoleAux {
    cplx Omega2{}, D{}, Delta2{};
    double omega = 0.0;
};

struct AmplitudeSpectrum {
    // ordered a1, a2, a1dag, a2dag
    std::array<QnmMode, 4> modes{};
    Regime regime = Regime::non_degenerate;
    PoleAux aux;
    Vec2d Omega = Vec2d::Zero();
    Vec2d Gamma = Vec2d::Zero();
    ModeParams params;
    // index of the strongly coupled field in the hierarchy branches
    int strong = 0;
    std::vector<std::string> diagnostics;

    const QnmMode& a(int c) const { return modes[c]; }
    const QnmMode& adag(int c) const { return modes[2 + c]; }
};

struct RegimeOptions {
    double kappa = 10.0;
    double hierarchy_ratio = 10.0;
    std::optional<Regime> force;
};

// sqrt(sum_ch w g_a^2) per field
Vec2d effective_couplings(const SpectralModel& model);

Regime classify_regime(const SpectralModel& model, const ModeParams& p, const RegimeOptions& opt = {});

PoleAux pole_aux(const Vec2d& w, const Mat2c& sigma);

AmplitudeSpectrum amplitude_spectrum(const SpectralModel& model, const ModeParams& p, Regime regime);

// Full square-root pole formula with per-mode bare-pole kernels and nearest-bare-pole branch matching.
AmplitudeSpectrum general_amplitude_spectrum(const SpectralModel& model, const ModeParams& p);

Mat2c greens_time_complex(const AmplitudeSpectrum& spec, double t, int derivative = 0);
Mat2d greens_time(const AmplitudeSpectrum& spec, double t, int derivative = 0);

struct AmplitudeTrajectory {
    std::vector<double> t;
    std::vector<Vec2d> phi, pi;
};

AmplitudeTrajectory evolve_amplitudes(const AmplitudeSpectrum& spec, const Vec2d& phi0, const Vec2d& pi0,
                                      const std::vector<double>& tgrid);

} // namespace mixqnm
