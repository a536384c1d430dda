#include "mixqnm/reductions.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace mixqnm {

WWReport ww_reduce(const SpectralModel& model, const ModeParams& p, double t_factor, int n_points)
{
    check_params(p);
    const Vec2d w = p.omegas();
    if (std::abs(w(0) - w(1)) > 1e-12)
        throw PreconditionError("ww_reduce needs omega1 = omega2");
    if (!p.zero_temperature())
        throw PreconditionError("ww_reduce needs beta = infinity");
    if (n_points < 2 || !(t_factor > 0.0))
        throw PreconditionError("ww_reduce needs n_points >= 2 and t_factor > 0");

    const double wb = 0.5 * (w(0) + w(1));
    const KernelMatrix km = boundary_kernels(model, p, wb, false);
    const Mat2c sig_minus = km.sigma_R.cast<cplx>() - I * km.sigma_I.cast<cplx>();

    WWReport r;
    r.H = -I * Mat2c(w.cast<cplx>().asDiagonal()) - I * sig_minus / (2.0 * wb);
    Eigen::ComplexEigenSolver<Mat2c> es(r.H, false);
    r.eig = es.eigenvalues();

    RegimeOptions ro;
    ro.force = Regime::nearly_degenerate;
    AmplitudeSpectrum amp;
    try {
        amp = amplitude_spectrum(model, p, classify_regime(model, p, ro));
    } catch (const NumericError& e) {
        r.diagnostics.push_back(std::string("no one-point comparison: ") + e.what());
        return r;
    }
    const OnePointSpectrum op = onepoint_spectrum(amp);
    r.compared = true;
    Vec2c poles(op.modes_a[0].pole, op.modes_a[1].pole);
    if (std::abs(r.eig(0) - poles(1)) + std::abs(r.eig(1) - poles(0)) <
        std::abs(r.eig(0) - poles(0)) + std::abs(r.eig(1) - poles(1)))
        std::swap(poles(0), poles(1));
    r.poles = poles;
    r.pole_deviation = (r.eig - poles).cwiseAbs().maxCoeff();

    const double gmax = std::max(-2.0 * poles(0).real(), -2.0 * poles(1).real());
    if (!(gmax > 0.0))
        throw NumericError("ww_reduce: no decaying mode");
    r.t_max = t_factor / gmax;
    for (int i = 0; i < n_points; ++i) {
        const double t = r.t_max * i / (n_points - 1);
        const Mat2c E = (r.H * t).exp();
        Mat2c G = Mat2c::Zero();
        for (const auto& m : op.modes_a)
            G += m.residue * std::exp(m.pole * t);
        r.propagator_deviation = std::max(r.propagator_deviation, (E - G).cwiseAbs().maxCoeff());
    }
    return r;
}

RwaReport rwa_solve(const SpectralModel& model, const ModeParams& p, const InitialState& init,
                    const OracleConfig& cfg, double t_max)
{
    check_initial(init);
    const OracleTrajectory full = integrate_correlators(model, p, init.D, cfg, t_max);
    const OracleTrajectory rwa = integrate_correlators_rwa(model, p, init.D, cfg, t_max);

    const AmplitudeSpectrum amp = amplitude_spectrum(model, p, classify_regime(model, p));
    const OnePointSpectrum op = onepoint_spectrum(amp);
    const BlockSystem sys = correlator_blocks(model, p);
    const CorrelatorSpectrum spec = correlator_spectrum(sys, op, amp.regime);
    EvolveOptions lead, part;
    part.keep = KeepOrder::g2_partial;
    const Solution s0 = correlator_solution(spec, sys, init, lead);
    const Solution s1 = correlator_solution(spec, sys, init, part);

    RwaReport r;
    r.t = full.t;
    for (std::size_t i = 0; i < full.t.size(); ++i) {
        const double g = (full.state[i].head<4>() - rwa.state[i].head<4>()).cwiseAbs().maxCoeff();
        const double q = (s1.D(full.t[i]) - s0.D(full.t[i])).head<4>().cwiseAbs().maxCoeff();
        r.gap.push_back(g);
        r.predicted.push_back(q);
        r.gap_max = std::max(r.gap_max, g);
        r.predicted_max = std::max(r.predicted_max, q);
    }
    if (amp.regime != Regime::non_degenerate)
        r.warnings.push_back("predicted gap uses the " + to_string(amp.regime) + " mode sum");
    return r;
}

} // namespace mixqnm
