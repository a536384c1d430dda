#pragma once

#include <functional>
#include <vector>

#include "mixqnm/types.hpp"

namespace mixqnm {

enum class Shape { ohmic_gaussian, ohmic_lorentzian };

struct Channel {
    Vec2d g = Vec2d::Zero();
    Shape shape = Shape::ohmic_gaussian;
    double lambda = 1.0;
    double weight = 1.0;
};

struct SpectralModel {
    std::vector<Channel> channels;
};

// Single momentum mode; indices are 0-based (field 1 -> 0).
struct ModeParams {
    Vec2d m = Vec2d::Ones();
    double kmag = 0.0;
    double beta = 1.0;

    double omega(int c) const { return std::sqrt(m(c) * m(c) + kmag * kmag); }
    Vec2d omegas() const { return {omega(0), omega(1)}; }
    double omega_bar() const { return 0.5 * (omega(0) + omega(1)); }
    double delta() const { return omega(0) - omega(1); }
    bool zero_temperature() const { return std::isinf(beta); }
};

SpectralModel build_model(const std::vector<Channel>& channels);
void check_params(const ModeParams& p);

// J(k)/k for one shape; even and finite at k = 0.
double shape_over_k(Shape s, double lambda, double k);
double shape_value(Shape s, double lambda, double k);

// Coupling matrix w g g^T of one channel.
Mat2d channel_coupling(const Channel& ch);

Mat2d rho(const SpectralModel& model, double k0);
double rho_eval(const SpectralModel& model, int a, int b, double k0);
// rho(k0)/k0, smooth through k0 = 0.
Mat2d rho_over_k(const SpectralModel& model, double k0);

struct SymmetryReport {
    double oddness = 0.0;
    double asymmetry = 0.0;
    double min_eigenvalue = 0.0; // most negative eigenvalue over k0 > 0, scaled by trace
    bool pass = false;
};

SymmetryReport validate_symmetries(const std::function<Mat2d(double)>& rho_fn,
                                   const std::vector<double>& grid);
SymmetryReport validate_symmetries(const SpectralModel& model, const std::vector<double>& grid);

} // namespace mixqnm
