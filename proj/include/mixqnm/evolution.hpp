#pragma once

#include "mixqnm/correlator.hpp"

namespace mixqnm {

struct InitialState {
    Vec2d phi0 = Vec2d::Zero();
    Vec2d pi0 = Vec2d::Zero();
    Vec16c D = Vec16c::Zero();

    // A = (1,0,0,1) for both momenta, B = 0
    static InitialState vacuum();
};

// Throws PreconditionError unless A_12 = conj A_21, Im A_11 = Im A_22 = 0, A_11, A_22 >= 1 and B* = conj B.
void check_initial(const InitialState& init);

enum class KeepOrder {
    leading,   // A = mode sum + noise fixed points, B = decay of B(0)
    g2_partial // adds the cross-block and B-part inhomogeneous O(g^2) pieces (incomplete at that order)
};

struct EvolveOptions {
    KeepOrder keep = KeepOrder::leading;
};

// D(t) = c + sum_m v_m exp(p_m t)
struct ModeSum {
    Vec16c constant = Vec16c::Zero();
    std::vector<std::pair<cplx, Vec16c>> terms;

    Vec16c operator()(double t) const;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec16c> D;
    std::vector<Vec4c> A_vac;
    std::vector<Vec2d> phi, pi;
    Regime regime = Regime::non_degenerate;
    std::string provenance;
    std::vector<std::string> warnings;

    Vec4c A(std::size_t i) const { return D[i].segment<4>(0); }
    Vec4c B(std::size_t i) const { return D[i].segment<4>(8); }
};

struct Solution {
    ModeSum D, A_vac;
    std::vector<std::string> warnings;
};

Solution correlator_solution(const CorrelatorSpectrum& spec, const BlockSystem& sys, const InitialState& init,
                             const EvolveOptions& opt = {});

Trajectory evolve_correlators(const CorrelatorSpectrum& spec, const AmplitudeSpectrum& amp, const BlockSystem& sys,
                              const InitialState& init, const std::vector<double>& tgrid,
                              const EvolveOptions& opt = {});

struct Observables {
    std::vector<Vec4d> S;
    std::vector<Vec2d> Ntilde;
    std::vector<Vec2d> N_raw;
    std::vector<std::string> diagnostics;
};

Observables observables(const Trajectory& traj);

struct FinalValue {
    Vec2d phi_inf = Vec2d::Zero();
    Vec16c D_inf = Vec16c::Zero();
    double condition = 0.0;
};

// Solves G_D^{-1}(0) D = N(0). The spectrum, when given, is checked for Re s < 0.
FinalValue final_value(const BlockSystem& sys, const CorrelatorSpectrum* spec = nullptr);

// 6 / min decay rate of the A-part, clamped to 1e6
double default_t_max(const CorrelatorSpectrum& spec);
std::vector<double> uniform_grid(double t_max, int n_points);

} // namespace mixqnm
