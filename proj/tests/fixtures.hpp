#pragma once

#include <cmath>
#include <functional>

#include "mixqnm/spectral.hpp"

namespace fx {

using namespace mixqnm;

inline SpectralModel gaussian_bath(double g1, double g2, double lambda = 10.0)
{
    Channel ch;
    ch.g = Vec2d(g1, g2);
    ch.shape = Shape::ohmic_gaussian;
    ch.lambda = lambda;
    return build_model({ch});
}

inline ModeParams params(double m1, double m2, double beta = 1.0)
{
    ModeParams p;
    p.m = Vec2d(m1, m2);
    p.beta = beta;
    return p;
}

// P0: well separated masses
inline SpectralModel p0_model(double g = 0.1) { return gaussian_bath(g, g); }
inline ModeParams p0_params() { return params(1.0, 1.1); }

// P1: nearly degenerate, same bath
inline SpectralModel p1_model(double g = 0.1) { return gaussian_bath(g, g); }
inline ModeParams p1_params() { return params(1.0, 1.0005); }

// P2: coupling hierarchy. The second channel gives field 2 its own decay width.
inline SpectralModel p2_model()
{
    Channel a, b;
    a.g = Vec2d(0.1, 0.005);
    a.lambda = 10.0;
    b.g = Vec2d(0.0, 0.005);
    b.lambda = 10.0;
    return build_model({a, b});
}
inline ModeParams p2_params() { return params(1.0, 1.0005); }

inline SpectralModel lorentzian_bath(double g1, double g2, double lambda = 5.0)
{
    Channel ch;
    ch.g = Vec2d(g1, g2);
    ch.shape = Shape::ohmic_lorentzian;
    ch.lambda = lambda;
    return build_model({ch});
}

inline SpectralModel two_channel_mixed()
{
    Channel a, b;
    a.g = Vec2d(0.08, 0.03);
    a.lambda = 6.0;
    b.g = Vec2d(-0.02, 0.07);
    b.shape = Shape::ohmic_lorentzian;
    b.lambda = 3.0;
    b.weight = 0.5;
    return build_model({a, b});
}

// Composite Simpson on [a,b] with n (even) panels; independent of the library quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Dawson integral by its Taylor series (|x| < 1).
inline double dawson(double x)
{
    double term = x, sum = x;
    for (int n = 1; n < 60; ++n) {
        term *= -2.0 * x * x / (2.0 * n + 1.0);
        sum += term;
    }
    return sum;
}

} // namespace fx
