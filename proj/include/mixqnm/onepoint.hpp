#pragma once

#include "mixqnm/amplitude.hpp"

namespace mixqnm {

// Which block of the (a, a^dagger) transfer the map produces.
enum class FMap { aa, adag_adag, a_adag, adag_a };

// Apply the F-map to an amplitude residue with pole s; U frequencies given by w.
Mat2c apply_fmap(FMap map, const Mat2c& G, cplx s, const Vec2d& w);

struct OnePointSpectrum {
    std::array<QnmMode, 2> modes_a{};
    std::array<QnmMode, 2> modes_adag{};
    Regime regime = Regime::non_degenerate;
    // frequencies used in U_phi, U_pi
    Vec2d uw = Vec2d::Zero();
    // largest dropped residue norms relative to the kept ones
    double dropped_aa = 0.0;    // F_aa applied to a^dagger-type amplitude modes
    double dropped_cross = 0.0; // F_{a,a^dagger} applied to a-type modes
};

OnePointSpectrum onepoint_spectrum(const AmplitudeSpectrum& amp);

// Bare pole used inside the F-map for mode c of the a (dagger = false) or a^dagger family.
cplx bare_pole(const AmplitudeSpectrum& amp, int c, bool dagger);

} // namespace mixqnm
