#include "doctest.h"
#include "fixtures.hpp"

#include "mixqnm/evolution.hpp"
#include "mixqnm/volterra.hpp"

#include <random>

using namespace mixqnm;
using doctest::Approx;

namespace {

struct Built {
    SpectralModel model;
    ModeParams p;
    BlockSystem sys;
    AmplitudeSpectrum amp;
    CorrelatorSpectrum spec;
};

Built build(const SpectralModel& m, const ModeParams& p, std::optional<Regime> force = {})
{
    RegimeOptions ro;
    ro.force = force;
    Built b{m, p, correlator_blocks(m, p), amplitude_spectrum(m, p, classify_regime(m, p, ro)), {}};
    b.spec = correlator_spectrum(b.sys, onepoint_spectrum(b.amp), b.amp.regime);
    return b;
}

Trajectory run(const Built& b, const InitialState& in, const std::vector<double>& tg, const EvolveOptions& o = {})
{
    return evolve_correlators(b.spec, b.amp, b.sys, in, tg, o);
}

InitialState excited(double n1, double n2, cplx coh = 0.0, cplx b11 = 0.0)
{
    InitialState in = InitialState::vacuum();
    for (int blk : {A_k, A_mk}) {
        in.D(flat(blk, 0, 0)) = 2 * n1 + 1;
        in.D(flat(blk, 1, 1)) = 2 * n2 + 1;
        in.D(flat(blk, 0, 1)) = coh;
        in.D(flat(blk, 1, 0)) = std::conj(coh);
    }
    in.D(flat(B_k, 0, 0)) = b11;
    in.D(flat(B_ks, 0, 0)) = std::conj(b11);
    return in;
}

} // namespace

TEST_CASE("initial state checks")
{
    CHECK_NOTHROW(check_initial(InitialState::vacuum()));
    InitialState bad = InitialState::vacuum();
    bad.D(0) = 0.5;
    CHECK_THROWS_AS(check_initial(bad), PreconditionError);
    bad = InitialState::vacuum();
    bad.D(1) = cplx(0.1, 0.2);
    CHECK_THROWS_AS(check_initial(bad), PreconditionError);
    bad = InitialState::vacuum();
    bad.D(8) = 0.3;
    CHECK_THROWS_AS(check_initial(bad), PreconditionError);
}

TEST_CASE("t = 0 reproduces the initial data")
{
    const InitialState in = excited(0.4, 0.2, cplx(0.05, 0.02), cplx(0.1, -0.05));
    for (auto [m, p] : {std::pair{fx::p0_model(), fx::p0_params()}, std::pair{fx::p1_model(), fx::p1_params()},
                        std::pair{fx::p2_model(), fx::p2_params()}}) {
        auto tr = run(build(m, p), in, {0.0});
        CHECK((tr.D[0] - in.D).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("non-degenerate thermal asymptote")
{
    auto b = build(fx::p0_model(), fx::p0_params());
    auto tr = run(b, InitialState::vacuum(), {0.0, 1e5});
    auto ob = observables(tr);
    CHECK(ob.Ntilde.back()(0) == Approx(0.58197671).epsilon(1e-6));
    CHECK(std::abs(ob.Ntilde.back()(0) - bose_occupation(1.0, 1.0)) < 1e-6);
    CHECK(std::abs(ob.Ntilde.back()(1) - bose_occupation(1.0, 1.1)) < 1e-6);
    CHECK(ob.S.back()(0) == Approx(1.08093737).epsilon(1e-7));
    CHECK(ob.S[0].norm() == 0.0);
    CHECK(ob.Ntilde[0].norm() == 0.0);
}

TEST_CASE("monotone approach from the vacuum")
{
    auto b = build(fx::p0_model(), fx::p0_params());
    auto tr = run(b, InitialState::vacuum(), uniform_grid(default_t_max(b.spec), 400));
    auto ob = observables(tr);
    for (std::size_t i = 1; i < ob.N_raw.size(); ++i) {
        CHECK(ob.N_raw[i](0) >= ob.N_raw[i - 1](0) - 1e-12);
        CHECK(ob.N_raw[i](1) >= ob.N_raw[i - 1](1) - 1e-12);
    }
}

TEST_CASE("Hermiticity along trajectories")
{
    for (auto [m, p] : {std::pair{fx::p0_model(), fx::p0_params()}, std::pair{fx::p1_model(), fx::p1_params()}}) {
        auto b = build(m, p);
        auto tr = run(b, excited(0.3, 0.1, cplx(0.02, 0.01), cplx(0.1, 0.05)), uniform_grid(2000.0, 101));
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            const Vec4c a = tr.A(i);
            CHECK(std::abs(a(1) - std::conj(a(2))) < 1e-10);
            CHECK(std::abs(a(0).imag()) < 1e-10);
            CHECK(std::abs(a(3).imag()) < 1e-10);
            CHECK((tr.D[i].segment<4>(12) - tr.D[i].segment<4>(8).conjugate()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((tr.D[i].segment<4>(0) - tr.D[i].segment<4>(4)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("without noise every correlator decays")
{
    auto b = build(fx::p0_model(), fx::p0_params());
    b.sys.noise_terms.clear();
    auto tr = run(b, excited(1.0, 0.5, cplx(0.1, 0.0), cplx(0.2, 0.1)), {0.0, 2e4});
    CHECK(tr.D.back().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("linearity in the initial data")
{
    auto b = build(fx::p1_model(), fx::p1_params());
    const auto tg = uniform_grid(800.0, 41);
    const InitialState x = excited(0.5, 0.0, cplx(0.1, 0.05), cplx(0.2, -0.1));
    const auto base = run(b, InitialState::vacuum(), tg);
    const auto tx = run(b, x, tg);
    InitialState x2 = x;
    x2.D = 2.0 * x.D - InitialState::vacuum().D;
    const auto t2 = run(b, x2, tg);
    for (std::size_t i = 0; i < tg.size(); ++i)
        CHECK((t2.D[i] - base.D[i] - 2.0 * (tx.D[i] - base.D[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nearly degenerate populations at five lifetimes")
{
    // the dark mode has not relaxed yet, so Ntilde sits well below n(omega_bar); compare with the oracle
    auto m = fx::p1_model();
    auto p = fx::p1_params();
    auto b = build(m, p);
    const double T = 5.0 / b.amp.Gamma(0);
    auto ob = observables(run(b, InitialState::vacuum(), {0.0, T}));
    OracleConfig cfg;
    cfg.richardson = false;
    ModeParams pv = p;
    pv.beta = infinite_beta;
    const auto full = integrate_correlators(m, p, InitialState::vacuum().D, cfg, T);
    const auto vac = integrate_correlators(m, pv, InitialState::vacuum().D, cfg, T);
    auto oo = observables(to_trajectory(full, b.amp.regime, &vac));
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(ob.Ntilde.back()(c) / oo.Ntilde.back()(c) - 1.0) < 0.05);
        CHECK(ob.Ntilde.back()(c) < 0.6 * bose_occupation(1.0, p.omega_bar()));
    }
}

TEST_CASE("final value")
{
    SUBCASE("zero coupling is singular")
    {
        auto sys = correlator_blocks(fx::gaussian_bath(0.0, 0.0), fx::p0_params());
        CHECK_THROWS_AS(final_value(sys), NumericError);
    }
    SUBCASE("agrees with long-time evolution to 20 g^2")
    {
        for (auto [m, p] : {std::pair{fx::p0_model(), fx::p0_params()}, std::pair{fx::p1_model(), fx::p1_params()}}) {
            auto b = build(m, p);
            auto fv = final_value(b.sys, &b.spec);
            CHECK(fv.phi_inf.norm() == 0.0);
            CHECK(fv.condition < 1e12);
            auto tr = run(b, InitialState::vacuum(), {10.0 / b.amp.Gamma.minCoeff()});
            CHECK((fv.D_inf - tr.D[0]).cwiseAbs().maxCoeff() < 20 * 0.01);
        }
    }
    SUBCASE("population asymptote differs from 2n+1 at O(g^2)")
    {
        auto b = build(fx::p0_model(), fx::p0_params());
        const double a11 = final_value(b.sys).D_inf(0).real();
        const double target = 2 * bose_occupation(1.0, 1.0) + 1;
        CHECK(std::abs(a11 - target) < 20 * 0.01);
        CHECK(a11 == Approx(2.088465).epsilon(1e-5));
    }
}

TEST_CASE("single-field reduction matches the closed forms")
{
    auto m = fx::gaussian_bath(0.1, 0.0);
    auto p = fx::p0_params();
    auto b = build(m, p, Regime::non_degenerate);
    const cplx b0(0.3, 0.1);
    const InitialState in = excited(0.6, 0.0, 0.0, b0);
    const auto tg = uniform_grid(3.0 / b.amp.Gamma(0), 301);
    EvolveOptions o;
    o.keep = KeepOrder::g2_partial;
    auto tr = run(b, in, tg, o);
    auto ref = single_species_reference(m, p, 0, 2.2, 2.2, b0, tg);
    for (std::size_t i = 0; i < tg.size(); ++i) {
        CHECK(std::abs(tr.D[i](flat(A_k, 0, 0)) - ref.A[i]) < 1e-8);
        CHECK(std::abs(tr.D[i](flat(B_k, 0, 0)) - ref.B[i]) < 1e-8);
    }
    // population decay rate is twice the amplitude rate
    CHECK(ref.Gamma == Approx(2 * b.amp.Gamma(0)).epsilon(1e-12));
}

TEST_CASE("single-species asymptote golden value")
{
    auto m = fx::gaussian_bath(0.1, 0.0);
    auto p = fx::p0_params();
    auto ref = single_species_reference(m, p, 0, 1.0, 1.0, 0.0, {0.0, 1e6});
    const KernelMatrix km = boundary_kernels(m, p, 1.0, true);
    const double n = bose_occupation(1.0, 1.0);
    const double expect = (1 - km.sigma_R(0, 0)) * (2 * n + 1) + 2 * km.noise_I(0, 0);
    CHECK(ref.A.back().real() == Approx(expect).epsilon(1e-12));
    CHECK(ref.A.back().real() == Approx(2.1950).epsilon(1e-4));
    CHECK(ref.A[0] == cplx(1.0, 0.0));
    CHECK(ref.B[0] != cplx(0.0, 0.0)); // the closed forms carry O(g^2) pieces at t = 0
}

TEST_CASE("non-negativity on random parameters")
{
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ug(0.01, 0.1), ub(0.2, 5.0), um(0.0, 1.0);
    int checked = 0;
    for (int draw = 0; draw < 40; ++draw) {
        const bool near = draw % 2 == 1;
        const double g1 = ug(rng), g2 = ug(rng);
        const double m2 = near ? 1.0 + 1e-4 * um(rng) : 1.1 + 0.3 * um(rng);
        auto b = build(fx::gaussian_bath(g1, g2), fx::params(1.0, m2, ub(rng)));
        auto tr = run(b, InitialState::vacuum(), uniform_grid(default_t_max(b.spec), 200));
        for (const auto& nt : observables(tr).Ntilde) {
            CHECK(nt(0) >= -1e-8);
            CHECK(nt(1) >= -1e-8);
        }
        ++checked;
    }
    CHECK(checked == 40);
}

TEST_CASE("regime mismatch and warnings")
{
    auto b = build(fx::p0_model(), fx::p0_params());
    auto other = amplitude_spectrum(fx::p0_model(), fx::p0_params(), Regime::nearly_degenerate);
    CHECK_THROWS_WITH(evolve_correlators(b.spec, other, b.sys, InitialState::vacuum(), {0.0}), "regime mismatch");

    auto hot = build(fx::p0_model(), fx::params(1.0, 1.1, 50.0));
    auto tr = run(hot, InitialState::vacuum(), {0.0});
    CHECK(!tr.warnings.empty());
}

TEST_CASE("default time window")
{
    auto b = build(fx::p0_model(), fx::p0_params());
    const double T = default_t_max(b.spec);
    CHECK(T == Approx(6.0 / (2 * b.amp.Gamma.minCoeff())).epsilon(1e-2));
    auto g = uniform_grid(10.0, 11);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 10.0);
    CHECK(g.size() == 11);
}
