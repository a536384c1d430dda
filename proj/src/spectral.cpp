#include "mixqnm/spectral.hpp"

#include <cmath>

namespace mixqnm {

SpectralModel build_model(const std::vector<Channel>& channels)
{
    if (channels.empty())
        throw ConfigError("empty-channels", "empty channel list");
    for (const auto& ch : channels) {
        if (!std::isfinite(ch.g(0)) || !std::isfinite(ch.g(1)))
            throw ConfigError("nan-coupling", "NaN or infinite coupling");
        if (!(ch.lambda > 0.0) || !std::isfinite(ch.lambda))
            throw ConfigError("non-positive-cutoff", "non-positive cutoff");
        if (!(ch.weight >= 0.0) || !std::isfinite(ch.weight))
            throw ConfigError("negative-weight", "channel weight must be >= 0");
    }
    return SpectralModel{channels};
}

void check_params(const ModeParams& p)
{
    if (!(p.m(0) >= 0.0) || !(p.m(1) >= 0.0) || !std::isfinite(p.m(0)) || !std::isfinite(p.m(1)))
        throw ConfigError("bad-mass", "masses must be finite and >= 0");
    if (!(p.kmag >= 0.0) || !std::isfinite(p.kmag))
        throw ConfigError("bad-momentum", "|k| must be finite and >= 0");
    if (!(p.beta > 0.0))
        throw ConfigError("bad-beta", "beta must be > 0");
    if (!(p.omega(0) > 0.0) || !(p.omega(1) > 0.0))
        throw ConfigError("zero-frequency", "both mode frequencies must be > 0");
}

double shape_over_k(Shape s, double lambda, double k)
{
    const double x = k / lambda;
    switch (s) {
    case Shape::ohmic_gaussian:
        return std::exp(-x * x);
    case Shape::ohmic_lorentzian: {
        const double d = 1.0 + x * x;
        return 1.0 / (d * d);
    }
    }
    return 0.0;
}

double shape_value(Shape s, double lambda, double k) { return k * shape_over_k(s, lambda, k); }

Mat2d channel_coupling(const Channel& ch) { return ch.weight * ch.g * ch.g.transpose(); }

Mat2d rho(const SpectralModel& model, double k0)
{
    Mat2d r = Mat2d::Zero();
    for (const auto& ch : model.channels)
        r += channel_coupling(ch) * shape_value(ch.shape, ch.lambda, k0);
    return r;
}

double rho_eval(const SpectralModel& model, int a, int b, double k0) { return rho(model, k0)(a, b); }

Mat2d rho_over_k(const SpectralModel& model, double k0)
{
    Mat2d r = Mat2d::Zero();
    for (const auto& ch : model.channels)
        r += channel_coupling(ch) * shape_over_k(ch.shape, ch.lambda, k0);
    return r;
}

SymmetryReport validate_symmetries(const std::function<Mat2d(double)>& rho_fn,
                                   const std::vector<double>& grid)
{
    SymmetryReport rep;
    for (double k : grid) {
        const Mat2d rp = rho_fn(k);
        const Mat2d rm = rho_fn(-k);
        const double scale = std::max(rp.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        rep.oddness = std::max(rep.oddness, (rm + rp.transpose()).cwiseAbs().maxCoeff() / scale);
        rep.asymmetry = std::max(rep.asymmetry, (rp - rp.transpose()).cwiseAbs().maxCoeff() / scale);
        const double kk = std::abs(k);
        if (kk > 0.0) {
            const Mat2d rk = rho_fn(kk);
            const Mat2d sym = 0.5 * (rk + rk.transpose());
            const double tr = std::abs(sym.trace());
            if (tr > 0.0) {
                Eigen::SelfAdjointEigenSolver<Mat2d> es(sym, Eigen::EigenvaluesOnly);
                rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues()(0) / tr);
            }
        }
    }
    rep.pass = rep.oddness <= 1e-14 && rep.asymmetry <= 1e-14 && rep.min_eigenvalue >= -1e-14;
    return rep;
}

SymmetryReport validate_symmetries(const SpectralModel& model, const std::vector<double>& grid)
{
    return validate_symmetries([&](double k) { return rho(model, k); }, grid);
}

} // namespace mixqnm
