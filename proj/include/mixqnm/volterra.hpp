#pragma once

#include <Eigen/Dense>

#include "mixqnm/evolution.hpp"

namespace mixqnm {

using VecXc = Eigen::VectorXcd;

struct OracleConfig {
    double dt = 0.0;            // <= 0 picks 0.25 / max(omega, Lambda)
    double memory_cut = 1e-10;  // relative truncation of the Sigma(tau) window
    int record_every = 0;       // <= 0 keeps about 4000 records
    bool richardson = true;     // rerun at dt/2 and attach the step-halving estimate
    bool noise = true;          // false zeroes the noise kernel
};

void check_config(const OracleConfig& cfg);
double default_dt(const SpectralModel& model, const ModeParams& p);

// Linear Volterra system
//   dy_r/dt = i Omega_r y_r + sum coeff int_0^t Sigma_ab(tau) e^{i nu tau} y_src(t - tau) dtau
//                          + sum coeff int_0^t N_ab(u) e^{i nu u} du
// with untilded kernels; tilde factors live in coeff.
struct VolterraSystem {
    Eigen::VectorXd Omega;
    struct Memory {
        int row, src;
        cplx coeff;
        int a, b;
        double nu;
    };
    struct Drive {
        int row;
        cplx coeff;
        int a, b;
        double nu;
    };
    std::vector<Memory> memory;
    std::vector<Drive> drive;
};

VolterraSystem correlator_volterra(const BlockSystem& sys);
VolterraSystem amplitude_volterra(const ModeParams& p);

struct OracleTrajectory {
    std::vector<double> t;
    std::vector<VecXc> state;
    std::vector<double> rich_err; // max component step-halving estimate, 0 without Richardson
    double trunc_err = 0.0;       // bound on the dropped kernel tail
    double dt = 0.0;
    int window = 0;
};

OracleTrajectory integrate(const VolterraSystem& vs, const SpectralModel& model, const ModeParams& p,
                           const VecXc& y0, const OracleConfig& cfg, double t_max);

// state = (phi1, phi2, pi1, pi2)
OracleTrajectory integrate_amplitudes(const SpectralModel& model, const ModeParams& p, const Vec2d& phi0,
                                      const Vec2d& pi0, const OracleConfig& cfg, double t_max);

// state = D (16 components)
OracleTrajectory integrate_correlators(const SpectralModel& model, const ModeParams& p, const Vec16c& D0,
                                       const OracleConfig& cfg, double t_max);

// Same system with the A <- B memory terms removed (rotating-wave variant of the A-part).
OracleTrajectory integrate_correlators_rwa(const SpectralModel& model, const ModeParams& p, const Vec16c& D0,
                                           const OracleConfig& cfg, double t_max);

// Oracle correlators as a Trajectory for observables(). A_vac comes from a vacuum run when given,
// otherwise it is the constant (1,0,0,1).
Trajectory to_trajectory(const OracleTrajectory& tr, Regime regime, const OracleTrajectory* vac = nullptr);

// Closed forms for a single field coupled alone to the bath (field index c of a two-field model).
struct SingleSpeciesTrajectory {
    std::vector<double> t;
    std::vector<cplx> A, B;
    std::vector<double> A_vac, Ntilde;
    double Gamma = 0.0, Omega = 0.0;
};

SingleSpeciesTrajectory single_species_reference(const SpectralModel& model, const ModeParams& p, int c, double A0,
                                                 double A0_minus, cplx B0, const std::vector<double>& tgrid);

} // namespace mixqnm
