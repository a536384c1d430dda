#include "mixqnm/kernels.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

namespace mixqnm {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

constexpr double rel_target = 1e-10;
constexpr double gk_tol = 1e-12;

struct Accum {
    double value = 0.0;
    double error = 0.0;
    double l1 = 0.0;

    template <class F> void add(F f, double a, double b)
    {
        double err = 0.0, l1p = 0.0;
        value += GK::integrate(f, a, b, 20, gk_tol, &err, &l1p);
        error += err;
        l1 += l1p;
    }

    double checked(const char* what) const
    {
        if (!std::isfinite(value) || error > rel_target * l1 + 1e-300)
            throw NumericError(std::string("quadrature did not converge: ") + what, l1 > 0 ? error / l1 : error);
        return value;
    }
};

// Gaussian shapes are dropped beyond 8 Lambda (e^-64); Lorentzian tails are kept.
double tail_start(const Channel& ch) { return (ch.shape == Shape::ohmic_gaussian ? 8.0 : 40.0) * ch.lambda; }
bool has_tail(const Channel& ch) { return ch.shape != Shape::ohmic_gaussian; }

// Scale of the Fourier integrals, used to turn relative error estimates into absolute ones.
double fourier_scale(const Channel& ch, double beta)
{
    const double base = 0.5 * ch.lambda * ch.lambda;
    return std::isinf(beta) ? base : base * std::max(1.0, 2.0 / (beta * ch.lambda));
}

// PV int_0^inf h(k)/(k^2 - w^2) dk for smooth even-ish h, w > 0.
template <class H> double pv_half_line(H h, double w, double kcut, const char* what)
{
    Accum acc;
    if (w == 0.0) {
        auto f = [&](double k) { return h(k) / (k * k); };
        acc.add(f, 0.0, kcut);
        acc.add(f, kcut, std::numeric_limits<double>::infinity());
        return acc.checked(what);
    }
    const double fw = h(w) / (2.0 * w);
    auto sub = [&](double k) {
        const double d = k - w;
        if (d == 0.0)
            return 0.0;
        return (h(k) / (k + w) - fw) / d;
    };
    acc.add(sub, 0.0, w);
    acc.add(sub, w, 2.0 * w);
    auto reg = [&](double k) { return h(k) / ((k - w) * (k + w)); };
    const double hi = std::max(2.0 * w, kcut);
    if (hi > 2.0 * w)
        acc.add(reg, 2.0 * w, hi);
    acc.add(reg, hi, std::numeric_limits<double>::infinity());
    return acc.checked(what);
}

boost::math::quadrature::ooura_fourier_sin<double>& ooura_sin()
{
    static thread_local boost::math::quadrature::ooura_fourier_sin<double> q(1e-12, 10);
    return q;
}

boost::math::quadrature::ooura_fourier_cos<double>& ooura_cos()
{
    static thread_local boost::math::quadrature::ooura_fourier_cos<double> q(1e-12, 10);
    return q;
}

} // namespace

double bose_occupation(double beta, double omega)
{
    if (omega == 0.0)
        throw NumericError("Bose pole at zero frequency");
    if (std::isinf(beta))
        return omega > 0 ? 0.0 : -1.0;
    return 1.0 / std::expm1(beta * omega);
}

double coth_half(double beta, double omega)
{
    if (omega == 0.0)
        throw NumericError("Bose pole at zero frequency");
    if (std::isinf(beta))
        return omega > 0 ? 1.0 : -1.0;
    return 1.0 / std::tanh(0.5 * beta * omega);
}

double k_coth_half(double beta, double omega)
{
    if (std::isinf(beta))
        return std::abs(omega);
    const double x = 0.5 * beta * omega;
    if (std::abs(x) < 1e-4)
        return (2.0 / beta) * (1.0 + x * x / 3.0);
    return omega / std::tanh(x);
}

Mat2d tilde_scale(const ModeParams& p)
{
    const Vec2d w = p.omegas();
    Mat2d s;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            s(a, b) = 1.0 / std::sqrt(2.0 * w(a) * 2.0 * w(b));
    return s;
}

double channel_sigma_R(const Channel& ch, double omega)
{
    const double w = std::abs(omega);
    auto h = [&](double k) { return k * k * shape_over_k(ch.shape, ch.lambda, k); };
    return -pv_half_line(h, w, tail_start(ch), "sigma_R") / pi;
}

double channel_noise_I(const Channel& ch, double beta, double omega)
{
    if (omega == 0.0)
        return 0.0;
    const double w = std::abs(omega);
    auto h = [&](double k) { return 0.5 * shape_over_k(ch.shape, ch.lambda, k) * k_coth_half(beta, k); };
    return omega / pi * pv_half_line(h, w, tail_start(ch), "noise_I");
}

namespace {

// int_0^inf f(k) sin(kt) dk (odd = true) or cos(kt) dk.
template <class F> double fourier_half_line(const Channel& ch, F f, double t, bool odd, double scale, const char* what)
{
    auto trig = [&](double x) { return odd ? std::sin(x) : std::cos(x); };
    // adaptive quadrature on the bulk, split into pieces of a few periods each
    const double K = tail_start(ch);
    const int pieces = std::clamp(static_cast<int>(K * t / (8.0 * pi)) + 1, 1, 4096);
    double v = 0.0, err = 0.0;
    for (int i = 0; i < pieces; ++i) {
        double e = 0.0, l1 = 0.0;
        const double a = K * i / pieces, b = K * (i + 1) / pieces;
        auto g = [&](double k) { return f(k) * trig(k * t); };
        // boost measures its tolerance against |value|; oscillating pieces cancel, so judge against L1
        double piece = GK::integrate(g, a, b, 0, gk_tol, &e, &l1);
        if (e > gk_tol * l1) {
            const double tol = std::min(1e-3, gk_tol * l1 / std::max(std::abs(piece), 1e-300));
            piece = GK::integrate(g, a, b, 15, tol, &e, &l1);
        }
        v += piece;
        err += e;
        // past the peak the shapes decay monotonically; stop once a piece no longer matters
        if (a > 2.0 * ch.lambda && l1 < 1e-6 * rel_target * scale) {
            err += l1 * (pieces - i - 1);
            break;
        }
    }
    if (!std::isfinite(v) || err > rel_target * scale)
        throw NumericError(std::string("quadrature did not converge: ") + what, err / scale);
    if (has_tail(ch) && t > 0.0) {
        // shifted tail: trig(Kt + ut) expanded so the oscillatory part sits in the Ooura kernel
        auto g = [&](double u) { return f(K + u); };
        auto [c, ec] = ooura_cos().integrate(g, t);
        auto [sn, es] = ooura_sin().integrate(g, t);
        if (!std::isfinite(c) || !std::isfinite(sn) || ec * std::abs(c) + es * std::abs(sn) > rel_target * scale)
            throw NumericError(std::string("Fourier tail did not converge: ") + what);
        v += odd ? std::sin(K * t) * c + std::cos(K * t) * sn : std::cos(K * t) * c - std::sin(K * t) * sn;
    } else if (has_tail(ch)) {
        Accum tail;
        tail.add(f, K, std::numeric_limits<double>::infinity());
        v += tail.checked(what);
    }
    return v;
}

} // namespace

double channel_sigma_t(const Channel& ch, double t)
{
    if (t == 0.0)
        return 0.0;
    auto J = [&](double k) { return shape_value(ch.shape, ch.lambda, k); };
    return -fourier_half_line(ch, J, t, true, fourier_scale(ch, infinite_beta), "sigma(t)") / pi;
}

double channel_noise_t(const Channel& ch, double beta, double t)
{
    auto E = [&](double k) { return 0.5 * shape_over_k(ch.shape, ch.lambda, k) * k_coth_half(beta, k); };
    return fourier_half_line(ch, E, t, false, fourier_scale(ch, beta), "noise(t)") / pi;
}

KernelMatrix boundary_kernels(const SpectralModel& model, const ModeParams& p, double omega, bool tilde)
{
    KernelMatrix km;
    km.omega = omega;
    km.tilde = tilde;
    km.sigma_I = 0.5 * rho(model, omega);
    // (n + 1/2) Sigma_I written through rho/k so that omega = 0 stays finite
    km.noise_R = 0.25 * rho_over_k(model, omega) * k_coth_half(p.beta, omega);
    for (const auto& ch : model.channels) {
        const Mat2d c = channel_coupling(ch);
        if (c.isZero(0.0))
            continue;
        km.sigma_R += c * channel_sigma_R(ch, omega);
        km.noise_I += c * channel_noise_I(ch, p.beta, omega);
    }
    if (tilde) {
        const Mat2d s = tilde_scale(p);
        km.sigma_R = km.sigma_R.cwiseProduct(s);
        km.sigma_I = km.sigma_I.cwiseProduct(s);
        km.noise_R = km.noise_R.cwiseProduct(s);
        km.noise_I = km.noise_I.cwiseProduct(s);
    }
    return km;
}

TimeKernels time_kernels(const SpectralModel& model, const ModeParams& p, double t, bool tilde)
{
    if (t < 0.0)
        throw PreconditionError("time kernels need t >= 0");
    TimeKernels tk;
    for (const auto& ch : model.channels) {
        const Mat2d c = channel_coupling(ch);
        if (c.isZero(0.0))
            continue;
        tk.sigma += c * channel_sigma_t(ch, t);
        tk.noise += c * channel_noise_t(ch, p.beta, t);
    }
    if (tilde) {
        const Mat2d s = tilde_scale(p);
        tk.sigma = tk.sigma.cwiseProduct(s);
        tk.noise = tk.noise.cwiseProduct(s);
    }
    return tk;
}

double fdr_residual(const SpectralModel& model, const ModeParams& p, double omega)
{
    const KernelMatrix km = boundary_kernels(model, p, omega);
    // N_R(w) = N(-w)/2 with N(k0) = coth(beta k0/2) rho(k0)/2, evaluated directly
    const Mat2d nr = 0.25 * coth_half(p.beta, -omega) * rho(model, -omega);
    const Mat2d res = km.sigma_I * coth_half(p.beta, omega) - 2.0 * nr;
    return res.cwiseAbs().maxCoeff();
}

} // namespace mixqnm
