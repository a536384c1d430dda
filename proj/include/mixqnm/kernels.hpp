#pragma once

#include "mixqnm/spectral.hpp"

namespace mixqnm {

double bose_occupation(double beta, double omega);
// coth(beta*omega/2) = 2 n(omega) + 1, with the sign(omega) limit at beta = inf.
double coth_half(double beta, double omega);
// omega*coth(beta*omega/2): even, equals 2/beta at omega = 0 and |omega| at beta = inf.
double k_coth_half(double beta, double omega);

// Boundary values at s = i*omega + 0+.
struct KernelMatrix {
    Mat2d sigma_R = Mat2d::Zero();
    Mat2d sigma_I = Mat2d::Zero();
    Mat2d noise_R = Mat2d::Zero();
    Mat2d noise_I = Mat2d::Zero();
    double omega = 0.0;
    bool tilde = false;

    Mat2c sigma() const { return sigma_R.cast<cplx>() + I * sigma_I.cast<cplx>(); }
    Mat2c noise() const { return noise_R.cast<cplx>() + I * noise_I.cast<cplx>(); }
};

// 1/sqrt(2 w_a 2 w_b)
Mat2d tilde_scale(const ModeParams& p);

KernelMatrix boundary_kernels(const SpectralModel& model, const ModeParams& p, double omega,
                              bool tilde = false);

// Per-channel scalar pieces (couplings stripped). Exposed for the oracle and tests.
double channel_sigma_R(const Channel& ch, double omega);
double channel_noise_I(const Channel& ch, double beta, double omega);
double channel_sigma_t(const Channel& ch, double t);
double channel_noise_t(const Channel& ch, double beta, double t);

struct TimeKernels {
    Mat2d sigma = Mat2d::Zero();
    Mat2d noise = Mat2d::Zero();
};

TimeKernels time_kernels(const SpectralModel& model, const ModeParams& p, double t, bool tilde = false);

double fdr_residual(const SpectralModel& model, const ModeParams& p, double omega);

} // namespace mixqnm
