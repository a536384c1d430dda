#include "doctest.h"
#include "fixtures.hpp"

#include "mixqnm/amplitude.hpp"
#include "mixqnm/volterra.hpp"

#include <random>

using namespace mixqnm;
using doctest::Approx;

namespace {

AmplitudeSpectrum auto_spectrum(const SpectralModel& m, const ModeParams& p)
{
    return amplitude_spectrum(m, p, classify_regime(m, p));
}

} // namespace

TEST_CASE("regime classification of the fixtures")
{
    CHECK(classify_regime(fx::p0_model(), fx::p0_params()) == Regime::non_degenerate);
    CHECK(classify_regime(fx::p1_model(), fx::p1_params()) == Regime::nearly_degenerate);
    CHECK(is_hierarchy(classify_regime(fx::p2_model(), fx::p2_params())));
    RegimeOptions ro;
    ro.force = Regime::hierarchy_g1sq;
    CHECK(classify_regime(fx::p0_model(), fx::p0_params(), ro) == Regime::hierarchy_g1sq);
    for (Regime r : {Regime::non_degenerate, Regime::nearly_degenerate, Regime::hierarchy_g1sq, Regime::hierarchy_g1g2})
        CHECK(regime_from_string(to_string(r)) == r);
    CHECK_THROWS(regime_from_string("sideways"));
}

TEST_CASE("zero coupling gives bare poles and residues")
{
    auto m = fx::gaussian_bath(0.0, 0.0);
    auto p = fx::p0_params();
    const double w1 = 1.0, w2 = std::sqrt(1.21);
    {
        auto s = amplitude_spectrum(m, p, Regime::non_degenerate);
        CHECK(std::abs(s.adag(0).pole - I * w1) < 1e-14);
        CHECK(std::abs(s.adag(1).pole - I * w2) < 1e-14);
        CHECK(std::abs(s.a(0).pole + I * w1) < 1e-14);
        CHECK(std::abs(s.a(1).pole + I * w2) < 1e-14);
        Mat2c expect = Mat2c::Zero();
        expect(0, 0) = 1.0 / (2.0 * I * w1);
        CHECK((s.adag(0).residue - expect).norm() < 1e-15);
    }
}

TEST_CASE("P0 decay rate")
{
    auto s = auto_spectrum(fx::p0_model(), fx::p0_params());
    CHECK(s.Gamma(0) == Approx(0.00247512).epsilon(1e-6));
    CHECK(s.Gamma(0) == Approx(0.5 * 0.00495025).epsilon(1e-5));
}

TEST_CASE("rank-1 equal couplings at equal masses leave a dark mode")
{
    auto p = fx::params(1.0, 1.0);
    auto s = amplitude_spectrum(fx::p1_model(), p, Regime::nearly_degenerate);
    CHECK(std::abs(s.adag(1).pole - I * 1.0) < 1e-15);
    CHECK(s.Gamma(1) == 0.0);
    // the bright combination carries the full width Sigma_I,11
    CHECK(s.Gamma(0) == Approx(0.00495025).epsilon(1e-5));
}

TEST_CASE("conjugate symmetry of poles and residues")
{
    for (auto [m, p] : {std::pair{fx::p0_model(), fx::p0_params()}, std::pair{fx::p1_model(), fx::p1_params()},
                        std::pair{fx::p2_model(), fx::p2_params()}}) {
        auto s = auto_spectrum(m, p);
        for (int c = 0; c < 2; ++c) {
            CHECK(std::abs(std::conj(s.a(c).pole) - s.adag(c).pole) < 1e-12);
            CHECK((s.a(c).residue.conjugate() - s.adag(c).residue).norm() < 1e-12);
        }
    }
}

TEST_CASE("pole shifts are linear in g^2")
{
    std::vector<cplx> slope;
    for (double g : {0.01, 0.02, 0.05}) {
        auto s = amplitude_spectrum(fx::p0_model(g), fx::p0_params(), Regime::non_degenerate);
        slope.push_back((s.adag(0).pole - I * 1.0) / (g * g));
    }
    CHECK(std::abs(slope[1] / slope[0] - 1.0) < 0.1);
    CHECK(std::abs(slope[2] / slope[0] - 1.0) < 0.1);
}

TEST_CASE("residue closure is exact only without coupling")
{
    auto s0 = amplitude_spectrum(fx::gaussian_bath(0.0, 0.0), fx::p0_params(), Regime::non_degenerate);
    CHECK(greens_time_complex(s0, 0.0).norm() < 1e-14);
    CHECK((greens_time_complex(s0, 0.0, 1) - Mat2c::Identity()).norm() < 1e-14);

    // truncated residues miss the identity by O(g^2)
    std::vector<double> dev;
    for (double g : {0.02, 0.05, 0.1}) {
        auto s = amplitude_spectrum(fx::p0_model(g), fx::p0_params(), Regime::non_degenerate);
        dev.push_back((greens_time_complex(s, 0.0, 1) - Mat2c::Identity()).norm());
    }
    const double slope = std::log(dev[2] / dev[0]) / std::log(5.0);
    CHECK(slope == Approx(2.0).epsilon(0.15));
}

TEST_CASE("Green's function is real and bounded by its envelope")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ut(0.0, 600.0);
    for (auto [m, p] : {std::pair{fx::p0_model(), fx::p0_params()}, std::pair{fx::p1_model(), fx::p1_params()}}) {
        auto s = auto_spectrum(m, p);
        for (int i = 0; i < 50; ++i) {
            const Mat2c G = greens_time_complex(s, ut(rng));
            CHECK(G.imag().cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, G.norm()));
        }
    }
    auto s = auto_spectrum(fx::p0_model(), fx::p0_params());
    double bound = 0.0;
    for (const auto& md : s.modes)
        bound += md.residue.norm();
    CHECK(greens_time(s, 100.0).norm() <= std::exp(-s.Gamma.minCoeff() * 100.0) * bound);
}

TEST_CASE("free oscillator")
{
    auto s = amplitude_spectrum(fx::gaussian_bath(0.0, 0.0), fx::p0_params(), Regime::non_degenerate);
    auto tr = evolve_amplitudes(s, Vec2d(1, 0), Vec2d(0, 0), {0.0, 1.0, 17.5, 100.0});
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        CHECK(tr.phi[i](0) == Approx(std::cos(tr.t[i])).epsilon(1e-13));
        CHECK(tr.phi[i](1) == 0.0);
        CHECK(tr.pi[i](0) == Approx(-std::sin(tr.t[i])).epsilon(1e-13));
    }
}

TEST_CASE("induced amplitude of the second field")
{
    OracleConfig cfg;
    cfg.richardson = false;
    SUBCASE("nearly degenerate: O(1) and within 2% of the oracle")
    {
        auto m = fx::p1_model();
        auto p = fx::p1_params();
        auto tr = integrate_amplitudes(m, p, Vec2d(1, 0), Vec2d(0, 0), cfg, 600.0);
        auto ev = evolve_amplitudes(auto_spectrum(m, p), Vec2d(1, 0), Vec2d(0, 0), tr.t);
        double mo = 0.0, me = 0.0;
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            mo = std::max(mo, std::abs(tr.state[i](1).real()));
            me = std::max(me, std::abs(ev.phi[i](1)));
        }
        CHECK(mo > 0.5);
        CHECK(std::abs(me / mo - 1.0) < 0.02);
    }
    SUBCASE("non-degenerate: set by the mixing ratio")
    {
        auto m = fx::p0_model();
        auto p = fx::p0_params();
        auto ev = evolve_amplitudes(auto_spectrum(m, p), Vec2d(1, 0), Vec2d(0, 0), uniform_grid(600.0, 6001));
        double me = 0.0;
        for (const auto& ph : ev.phi)
            me = std::max(me, std::abs(ph(1)));
        const double est = std::abs(boundary_kernels(m, p, 1.0).sigma()(0, 1)) / std::abs(1.0 - 1.21);
        CHECK(me / est > 0.5);
        CHECK(me / est < 2.0);
    }
}

TEST_CASE("hierarchy power counting")
{
    auto s = auto_spectrum(fx::p2_model(), fx::p2_params());
    const double ratio = s.Gamma(0) / s.Gamma(1);
    CHECK(ratio > 400.0 / 3.0);
    CHECK(ratio < 1200.0);
    const double off = std::abs(s.adag(0).residue(1, 0)) / std::abs(s.adag(0).residue(0, 0));
    CHECK(off > 0.05 / 3.0);
    CHECK(off < 0.15);
}

TEST_CASE("general square-root branch agrees with the truncation to O(g^4)")
{
    std::vector<double> dev;
    for (double g : {0.02, 0.05}) {
        auto m = fx::p0_model(g);
        auto a = amplitude_spectrum(m, fx::p0_params(), Regime::non_degenerate);
        auto b = general_amplitude_spectrum(m, fx::p0_params());
        CHECK(b.diagnostics.empty());
        dev.push_back(std::abs(a.adag(0).pole - b.adag(0).pole));
    }
    CHECK(std::log(dev[1] / dev[0]) / std::log(2.5) == Approx(4.0).epsilon(0.1));
}
