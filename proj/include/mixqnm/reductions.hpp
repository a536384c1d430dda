#pragma once

#include "mixqnm/volterra.hpp"

namespace mixqnm {

// Effective 2x2 generator for the annihilation amplitudes at equal masses and zero temperature:
// H_cd = -i omega delta_cd - i Sigma_cd(-i omega) / (2 omega)
struct WWReport {
    Mat2c H = Mat2c::Zero();
    Vec2c eig = Vec2c::Zero();
    Vec2c poles = Vec2c::Zero();     // one-point a-mode poles, matched to eig
    double pole_deviation = 0.0;     // max |eig - pole|
    double propagator_deviation = 0.0; // max_t ||exp(H t) - G_a(t)|| on the sampled window
    double t_max = 0.0;
    bool compared = false;           // false when the one-point spectrum is singular (D = 0)
    std::vector<std::string> diagnostics;
};

// Requires |omega1 - omega2| <= 1e-12 and beta = infinity. Samples t on [0, t_factor / Gamma_max].
WWReport ww_reduce(const SpectralModel& model, const ModeParams& p, double t_factor = 3.0, int n_points = 200);

struct RwaReport {
    std::vector<double> t;
    std::vector<double> gap;      // max over A entries of |full - rwa|
    std::vector<double> predicted; // max over A entries of the cross-block mode-sum pieces
    double gap_max = 0.0;
    double predicted_max = 0.0;
    std::vector<std::string> warnings;
};

// Full oracle vs the oracle without A <- B memory terms, from the same initial D.
RwaReport rwa_solve(const SpectralModel& model, const ModeParams& p, const InitialState& init,
                    const OracleConfig& cfg, double t_max);

} // namespace mixqnm
