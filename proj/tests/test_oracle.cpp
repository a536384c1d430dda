#include "doctest.h"
#include "fixtures.hpp"

#include "mixqnm/volterra.hpp"

using namespace mixqnm;
using doctest::Approx;

namespace {

OracleConfig quick()
{
    OracleConfig c;
    c.richardson = false;
    return c;
}

// least-squares slope of y against x
double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    Eigen::MatrixXd A(x.size(), 2);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        A(i, 0) = 1.0, A(i, 1) = x[i], b(i) = y[i];
    return A.colPivHouseholderQr().solve(b)(1);
}

} // namespace

TEST_CASE("config validation")
{
    OracleConfig c;
    CHECK_NOTHROW(check_config(c));
    c.memory_cut = 0.0;
    CHECK_THROWS_AS(check_config(c), ConfigError);
    c.memory_cut = 1e-3;
    CHECK_THROWS_AS(check_config(c), ConfigError);
    c = OracleConfig{};
    c.dt = -1.0;
    CHECK_THROWS_AS(check_config(c), ConfigError);
    CHECK(default_dt(fx::p0_model(), fx::p0_params()) == Approx(0.025));
}

TEST_CASE("free oscillator")
{
    auto tr = integrate_amplitudes(fx::gaussian_bath(0.0, 0.0), fx::p0_params(), Vec2d(1, 0), Vec2d(0, 0),
                                   OracleConfig{}, 100.0);
    CHECK(tr.t.back() == Approx(100.0));
    CHECK(std::abs(tr.state.back()(0).real() - std::cos(100.0)) < 1e-6);
    CHECK(std::abs(tr.state.back()(1)) < 1e-15);
    CHECK(tr.window == 0);
}

TEST_CASE("free correlators rotate without drift")
{
    OracleConfig c = quick();
    c.noise = false;
    Vec16c D0 = InitialState::vacuum().D;
    D0(flat(A_k, 0, 1)) = cplx(0.2, 0.1);
    D0(flat(A_k, 1, 0)) = cplx(0.2, -0.1);
    D0(flat(B_k, 0, 1)) = cplx(0.3, 0.0);
    D0(flat(B_ks, 0, 1)) = cplx(0.3, 0.0);
    auto p = fx::p0_params();
    auto tr = integrate_correlators(fx::gaussian_bath(0.0, 0.0), p, D0, c, 100.0);
    const double t = tr.t.back();
    const Vec2d w = p.omegas();
    CHECK(std::abs(tr.state.back()(0) - 1.0) < 1e-8);
    CHECK(std::abs(tr.state.back()(flat(A_k, 0, 1)) - D0(1) * std::exp(I * (w(0) - w(1)) * t)) < 1e-8);
    CHECK(std::abs(tr.state.back()(flat(B_k, 0, 1)) - D0(9) * std::exp(-I * (w(0) + w(1)) * t)) < 1e-8);
}

TEST_CASE("second-order convergence")
{
    auto m = fx::p0_model();
    auto p = fx::p0_params();
    const double h = default_dt(m, p);
    auto err_at = [&](double dt, double ref_dt) {
        OracleConfig a = quick(), r = quick();
        a.dt = dt;
        r.dt = ref_dt;
        auto x = integrate_amplitudes(m, p, Vec2d(1, 0), Vec2d(0, 0), a, 50.0);
        auto y = integrate_amplitudes(m, p, Vec2d(1, 0), Vec2d(0, 0), r, 50.0);
        return (x.state.back() - y.state.back()).cwiseAbs().maxCoeff();
    };
    const double ratio = err_at(h, h / 16) / err_at(h / 2, h / 16);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("Richardson estimate is attached")
{
    auto tr = integrate_correlators(fx::p0_model(), fx::p0_params(), InitialState::vacuum().D, OracleConfig{}, 50.0);
    CHECK(tr.rich_err.size() == tr.t.size());
    CHECK(tr.rich_err.back() > 0.0);
    CHECK(tr.rich_err.back() < 1e-5);
    CHECK(tr.dt == Approx(0.0125));
}

TEST_CASE("decay envelope follows the full pole formula")
{
    auto m = fx::p0_model();
    auto p = fx::p0_params();
    OracleConfig c = quick();
    auto tr = integrate_amplitudes(m, p, Vec2d(1, 0), Vec2d(0, 0), c, 600.0);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < tr.t.size(); i += 10) {
        const double ph = tr.state[i](0).real(), pi1 = tr.state[i](2).real();
        x.push_back(tr.t[i]);
        y.push_back(0.5 * std::log(ph * ph + pi1 * pi1));
    }
    const double gamma = -slope(x, y);
    const auto general = general_amplitude_spectrum(m, p);
    CHECK(std::abs(gamma / general.Gamma(0) - 1.0) < 0.02);
    // the truncated width misses the mixing-induced redistribution
    const auto trunc = amplitude_spectrum(m, p, Regime::non_degenerate);
    CHECK(gamma / trunc.Gamma(0) > 1.1);
}

TEST_CASE("Hermiticity is preserved")
{
    Vec16c D0 = InitialState::vacuum().D;
    D0(flat(A_k, 0, 1)) = D0(flat(A_mk, 0, 1)) = cplx(0.1, 0.05);
    D0(flat(A_k, 1, 0)) = D0(flat(A_mk, 1, 0)) = cplx(0.1, -0.05);
    D0(flat(B_k, 0, 0)) = cplx(0.2, 0.1);
    D0(flat(B_ks, 0, 0)) = cplx(0.2, -0.1);
    auto tr = integrate_correlators(fx::p1_model(), fx::p1_params(), D0, quick(), 300.0);
    for (const auto& d : tr.state) {
        CHECK(std::abs(d(1) - std::conj(d(2))) < 1e-9);
        CHECK(std::abs(d(0).imag()) < 1e-9);
        CHECK((d.segment<4>(12) - d.segment<4>(8).conjugate()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("long-time limit equals the final-value solve")
{
    auto m = fx::p0_model();
    auto p = fx::p0_params();
    const auto fv = final_value(correlator_blocks(m, p));
    auto tr = integrate_correlators(m, p, InitialState::vacuum().D, quick(), 2000.0);
    // slowest A-part mode has rate 2 Gamma ~ 0.005 (general formula 0.0037 for field 2)
    for (int i : {flat(A_k, 0, 0), flat(A_k, 0, 1), flat(B_k, 0, 0)})
        CHECK(std::abs(tr.state.back()(i) - fv.D_inf(i)) < 1e-3);
}

TEST_CASE("Breit-Wigner error at three lifetimes")
{
    auto m = fx::p0_model();
    auto p = fx::p0_params();
    auto amp = amplitude_spectrum(m, p, Regime::non_degenerate);
    auto sys = correlator_blocks(m, p);
    auto spec = correlator_spectrum(sys, onepoint_spectrum(amp), amp.regime);
    const double T = 3.0 / -spec.mode(A_k, 0, 0).pole.real();
    auto tr = integrate_correlators(m, p, InitialState::vacuum().D, quick(), T);
    auto ev = evolve_correlators(spec, amp, sys, InitialState::vacuum(), {tr.t.back()});
    CHECK(std::abs(tr.state.back()(0) - ev.D[0](0)) < 5 * 0.01);
}

TEST_CASE("single-species reference at t = 0")
{
    auto m = fx::gaussian_bath(0.1, 0.0);
    auto ref = single_species_reference(m, fx::p0_params(), 0, 1.4, 1.4, 0.0, {0.0});
    CHECK(ref.A[0] == cplx(1.4, 0.0));
    CHECK(ref.A_vac[0] == 1.0);
    CHECK(std::abs(ref.Ntilde[0] - 0.2) < 1e-15);
    CHECK_THROWS_AS(single_species_reference(fx::p0_model(), fx::p0_params(), 0, 1, 1, 0.0, {0.0}),
                    PreconditionError);
}

TEST_CASE("instability detector")
{
    VolterraSystem vs;
    vs.Omega = Eigen::VectorXd::Zero(1);
    // anti-damping memory makes the state grow without bound
    vs.memory.push_back({0, 0, cplx(-200.0, 0.0), 0, 0, 0.0});
    OracleConfig c = quick();
    VecXc y0 = VecXc::Ones(1);
    CHECK_THROWS_AS(integrate(vs, fx::p0_model(), fx::p0_params(), y0, c, 2000.0), NumericError);
}

TEST_CASE("oracle trajectory feeds observables")
{
    auto tr = integrate_correlators(fx::p0_model(), fx::p0_params(), InitialState::vacuum().D, quick(), 10.0);
    auto ob = observables(to_trajectory(tr, Regime::non_degenerate));
    CHECK(ob.Ntilde.size() == tr.t.size());
    CHECK(ob.Ntilde[0].norm() == 0.0);
    CHECK_THROWS_AS(to_trajectory(integrate_amplitudes(fx::p0_model(), fx::p0_params(), Vec2d(1, 0), Vec2d(0, 0),
                                                       quick(), 1.0),
                                  Regime::non_degenerate),
                    PreconditionError);
}
