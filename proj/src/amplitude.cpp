#include "mixqnm/amplitude.hpp"

#include <cmath>

namespace mixqnm {

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::non_degenerate: return "non_degenerate";
    case Regime::nearly_degenerate: return "nearly_degenerate";
    case Regime::hierarchy_g1sq: return "hierarchy_g1sq";
    case Regime::hierarchy_g1g2: return "hierarchy_g1g2";
    }
    return "?";
}

Regime regime_from_string(const std::string& s)
{
    if (s == "non_degenerate" || s == "non-degenerate")
        return Regime::non_degenerate;
    if (s == "nearly_degenerate" || s == "nearly-degenerate")
        return Regime::nearly_degenerate;
    if (s == "hierarchy_g1sq" || s == "hierarchy-g1sq")
        return Regime::hierarchy_g1sq;
    if (s == "hierarchy_g1g2" || s == "hierarchy-g1g2")
        return Regime::hierarchy_g1g2;
    throw ConfigError("bad-regime", "unknown regime '" + s + "'");
}

std::string to_string(ModeLabel l)
{
    switch (l) {
    case ModeLabel::a1: return "a1";
    case ModeLabel::a2: return "a2";
    case ModeLabel::a1dag: return "a1dag";
    case ModeLabel::a2dag: return "a2dag";
    }
    return "?";
}

namespace {

Mat2c swap_fields(const Mat2c& m)
{
    Mat2c r;
    r << m(1, 1), m(1, 0), m(0, 1), m(0, 0);
    return r;
}

// Residue numerator of the +D (sign = +1) or -D (sign = -1) root.
Mat2c projector(const PoleAux& ax, const Mat2c& sig, double sign)
{
    const cplx r = ax.Delta2 / (2.0 * ax.D);
    Mat2c P;
    P << 0.5 + sign * r, sign * sig(0, 1) / ax.D, sign * sig(1, 0) / ax.D, 0.5 - sign * r;
    return P;
}

// Pick the square root of Delta^4 + 4 S12 S21 that follows Delta^2 as the mixing goes to zero.
cplx branch_D(cplx Delta2, cplx disc)
{
    cplx D = std::sqrt(disc);
    if (std::abs(Delta2) > 1e-12 * std::abs(D)) {
        if ((D * std::conj(Delta2)).real() < 0.0)
            D = -D;
    } else if (D.imag() < 0.0) {
        D = -D;
    }
    return D;
}

void finish(AmplitudeSpectrum& spec)
{
    for (int c = 0; c < 2; ++c) {
        spec.modes[c].label = c == 0 ? ModeLabel::a1 : ModeLabel::a2;
        spec.modes[c].pole = std::conj(spec.modes[2 + c].pole);
        spec.modes[c].residue = spec.modes[2 + c].residue.conjugate();
        spec.modes[2 + c].label = c == 0 ? ModeLabel::a1dag : ModeLabel::a2dag;
        spec.Omega(c) = std::abs(spec.modes[2 + c].pole.imag());
        spec.Gamma(c) = -spec.modes[2 + c].pole.real();
    }
}

} // namespace

PoleAux pole_aux(const Vec2d& w, const Mat2c& sig)
{
    PoleAux ax;
    ax.Omega2 = w(0) * w(0) + w(1) * w(1) + sig(0, 0) + sig(1, 1);
    ax.Delta2 = w(0) * w(0) - w(1) * w(1) + sig(0, 0) - sig(1, 1);
    ax.D = branch_D(ax.Delta2, ax.Delta2 * ax.Delta2 + 4.0 * sig(0, 1) * sig(1, 0));
    return ax;
}

Vec2d effective_couplings(const SpectralModel& model)
{
    Vec2d g = Vec2d::Zero();
    for (const auto& ch : model.channels)
        g += ch.weight * ch.g.cwiseAbs2();
    return g.cwiseSqrt();
}

Regime classify_regime(const SpectralModel& model, const ModeParams& p, const RegimeOptions& opt)
{
    if (opt.force)
        return *opt.force;
    const Vec2d w = p.omegas();
    const double wb = p.omega_bar();
    const KernelMatrix km = boundary_kernels(model, p, wb);
    const double split = std::abs(w(0) * w(0) - w(1) * w(1));
    const double scale = km.sigma_I.cwiseAbs().maxCoeff();
    if (!(split <= opt.kappa * scale))
        return Regime::non_degenerate;
    const Vec2d g = effective_couplings(model);
    const double hi = g.maxCoeff(), lo = g.minCoeff();
    if (!(hi >= opt.hierarchy_ratio * lo) || hi == 0.0)
        return Regime::nearly_degenerate;
    const int s = g(0) >= g(1) ? 0 : 1;
    const Mat2c sig = km.sigma();
    return split >= std::sqrt(std::abs(sig(s, s)) * std::abs(sig(0, 1))) ? Regime::hierarchy_g1sq
                                                                         : Regime::hierarchy_g1g2;
}

AmplitudeSpectrum amplitude_spectrum(const SpectralModel& model, const ModeParams& p, Regime regime)
{
    check_params(p);
    AmplitudeSpectrum spec;
    spec.regime = regime;
    spec.params = p;
    const Vec2d w = p.omegas();
    const double wb = p.omega_bar();

    if (regime == Regime::non_degenerate) {
        const cplx split = w(0) * w(0) - w(1) * w(1);
        if (split == 0.0)
            throw NumericError("non-degenerate branch needs omega1 != omega2");
        for (int c = 0; c < 2; ++c) {
            const Mat2c sig = boundary_kernels(model, p, w(c)).sigma();
            const int o = 1 - c;
            const cplx den = c == 0 ? split : -split;
            QnmMode& m = spec.modes[2 + c];
            m.pole = I * w(c) + I * sig(c, c) / (2.0 * w(c));
            Mat2c R = Mat2c::Zero();
            R(c, c) = 1.0;
            R(c, o) = sig(c, o) / den;
            R(o, c) = sig(o, c) / den;
            m.residue = R / (2.0 * I * w(c));
            if (c == 0)
                spec.aux = pole_aux(w, sig), spec.aux.omega = w(0);
        }
        finish(spec);
        return spec;
    }

    const Mat2c sig = boundary_kernels(model, p, wb).sigma();
    spec.aux = pole_aux(w, sig);
    spec.aux.omega = wb;
    if (std::abs(spec.aux.D) == 0.0)
        throw NumericError("degenerate-D singularity");

    if (regime == Regime::nearly_degenerate) {
        for (int c = 0; c < 2; ++c) {
            const double sign = c == 0 ? 1.0 : -1.0;
            QnmMode& m = spec.modes[2 + c];
            m.pole = I * wb + I * (sign * spec.aux.D + sig(0, 0) + sig(1, 1)) / (4.0 * wb);
            m.residue = projector(spec.aux, sig, sign) / (2.0 * I * wb);
        }
        finish(spec);
        return spec;
    }

    // hierarchy: work in a frame where the strongly coupled field is first
    const Vec2d g = effective_couplings(model);
    spec.strong = g(0) >= g(1) ? 0 : 1;
    const bool swapped = spec.strong == 1;
    const Mat2c S = swapped ? swap_fields(sig) : sig;
    const Vec2d ws = swapped ? Vec2d(w(1), w(0)) : w;
    const PoleAux ax = pole_aux(ws, S);
    const cplx mix = S(0, 1) * S(1, 0);
    const cplx den = regime == Regime::hierarchy_g1sq ? ws(0) * ws(0) - ws(1) * ws(1) + S(0, 0) : S(0, 0);
    if (std::abs(den) == 0.0)
        throw NumericError("hierarchy branch with vanishing denominator");
    std::array<cplx, 2> pole{
        I * ws(0) + I * S(0, 0) / (2.0 * wb) + I / (2.0 * wb) * mix / den,
        I * ws(1) + I / (2.0 * wb) * (S(1, 1) - mix / den),
    };
    for (int k = 0; k < 2; ++k) {
        const double sign = k == 0 ? 1.0 : -1.0;
        Mat2c R = projector(ax, S, sign) / (2.0 * I * wb);
        const int c = swapped ? 1 - k : k;
        spec.modes[2 + c].pole = pole[k];
        spec.modes[2 + c].residue = swapped ? swap_fields(R) : R;
    }
    finish(spec);
    return spec;
}

AmplitudeSpectrum general_amplitude_spectrum(const SpectralModel& model, const ModeParams& p)
{
    check_params(p);
    AmplitudeSpectrum spec;
    spec.regime = Regime::non_degenerate;
    spec.params = p;
    const Vec2d w = p.omegas();
    std::array<double, 2> used{0.0, 0.0};
    for (int c = 0; c < 2; ++c) {
        const Mat2c sig = boundary_kernels(model, p, w(c)).sigma();
        const PoleAux ax = pole_aux(w, sig);
        if (std::abs(ax.D) < 1e-12 * std::abs(ax.Omega2))
            throw NumericError("degenerate-D singularity");
        double best = 0.0;
        cplx best_s{};
        double best_d = std::numeric_limits<double>::infinity();
        for (double sign : {1.0, -1.0}) {
            const cplx s = I * std::sqrt((ax.Omega2 + sign * ax.D) / 2.0);
            const double d = std::abs(s - I * w(c));
            if (d < best_d)
                best_d = d, best = sign, best_s = s;
        }
        used[c] = best;
        spec.modes[2 + c].pole = best_s;
        spec.modes[2 + c].residue = projector(ax, sig, best) / (2.0 * best_s);
        if (c == 0)
            spec.aux = ax, spec.aux.omega = w(0);
    }
    if (used[0] == used[1])
        spec.diagnostics.push_back("branch mismatch: both modes matched the same root");
    finish(spec);
    return spec;
}

Mat2c greens_time_complex(const AmplitudeSpectrum& spec, double t, int derivative)
{
    Mat2c G = Mat2c::Zero();
    for (const auto& m : spec.modes)
        G += m.residue * (std::pow(m.pole, derivative) * std::exp(m.pole * t));
    return G;
}

Mat2d greens_time(const AmplitudeSpectrum& spec, double t, int derivative)
{
    return greens_time_complex(spec, t, derivative).real();
}

AmplitudeTrajectory evolve_amplitudes(const AmplitudeSpectrum& spec, const Vec2d& phi0, const Vec2d& pi0,
                                      const std::vector<double>& tgrid)
{
    AmplitudeTrajectory tr;
    tr.t = tgrid;
    tr.phi.reserve(tgrid.size());
    tr.pi.reserve(tgrid.size());
    for (double t : tgrid) {
        const Mat2d G = greens_time(spec, t, 0);
        const Mat2d G1 = greens_time(spec, t, 1);
        const Mat2d G2 = greens_time(spec, t, 2);
        tr.phi.push_back(G1 * phi0 + G * pi0);
        tr.pi.push_back(G1 * pi0 + G2 * phi0);
    }
    return tr;
}

} // namespace mixqnm
