#include "mixqnm/onepoint.hpp"

namespace mixqnm {

Mat2c apply_fmap(FMap map, const Mat2c& G, cplx s, const Vec2d& w)
{
    // signs multiplying sqrt(wc/wd), sqrt(wd/wc), i sqrt(wc wd)/s, i s/sqrt(wc wd)
    double p[4] = {1, 1, -1, 1};
    switch (map) {
    case FMap::aa: p[0] = 1, p[1] = 1, p[2] = -1, p[3] = 1; break;
    case FMap::adag_adag: p[0] = 1, p[1] = 1, p[2] = 1, p[3] = -1; break;
    case FMap::a_adag: p[0] = 1, p[1] = -1, p[2] = 1, p[3] = 1; break;
    case FMap::adag_a: p[0] = 1, p[1] = -1, p[2] = -1, p[3] = -1; break;
    }
    Mat2c F;
    for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
            const double r = std::sqrt(w(c) / w(d));
            const double q = std::sqrt(w(c) * w(d));
            const cplx k = p[0] * r + p[1] / r + p[2] * I * q / s + p[3] * I * s / q;
            F(c, d) = 0.25 * k * 2.0 * s * G(c, d);
        }
    return F;
}

cplx bare_pole(const AmplitudeSpectrum& amp, int c, bool dagger)
{
    const double w = amp.regime == Regime::non_degenerate ? amp.params.omega(c) : amp.params.omega_bar();
    return dagger ? I * w : -I * w;
}

OnePointSpectrum onepoint_spectrum(const AmplitudeSpectrum& amp)
{
    OnePointSpectrum op;
    op.regime = amp.regime;
    op.uw = amp.regime == Regime::non_degenerate ? amp.params.omegas() : Vec2d::Constant(amp.params.omega_bar());
    double kept = 0.0;
    for (int c = 0; c < 2; ++c) {
        op.modes_a[c].label = c == 0 ? ModeLabel::a1 : ModeLabel::a2;
        op.modes_a[c].pole = amp.a(c).pole;
        op.modes_a[c].residue = apply_fmap(FMap::aa, amp.a(c).residue, bare_pole(amp, c, false), op.uw);
        op.modes_adag[c].label = c == 0 ? ModeLabel::a1dag : ModeLabel::a2dag;
        op.modes_adag[c].pole = amp.adag(c).pole;
        op.modes_adag[c].residue =
            apply_fmap(FMap::adag_adag, amp.adag(c).residue, bare_pole(amp, c, true), op.uw);
        kept = std::max(kept, op.modes_a[c].residue.norm());
    }
    for (int c = 0; c < 2; ++c) {
        // dropped pieces evaluated at the dressed poles
        op.dropped_aa = std::max(op.dropped_aa, apply_fmap(FMap::aa, amp.adag(c).residue, amp.adag(c).pole, op.uw).norm());
        op.dropped_cross = std::max(op.dropped_cross, apply_fmap(FMap::a_adag, amp.a(c).residue, amp.a(c).pole, op.uw).norm());
    }
    if (kept > 0.0) {
        op.dropped_aa /= kept;
        op.dropped_cross /= kept;
    }
    return op;
}

} // namespace mixqnm
