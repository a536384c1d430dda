#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mixqnm {

using cplx = std::complex<double>;

template <class S> using Mat2 = Eigen::Matrix<S, 2, 2>;
template <class S> using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S> using Mat4 = Eigen::Matrix<S, 4, 4>;
template <class S> using Vec4 = Eigen::Matrix<S, 4, 1>;
template <class S> using Mat16 = Eigen::Matrix<S, 16, 16>;
template <class S> using Vec16 = Eigen::Matrix<S, 16, 1>;

using Mat2d = Mat2<double>;
using Mat2c = Mat2<cplx>;
using Vec2d = Vec2<double>;
using Vec2c = Vec2<cplx>;
using Mat4c = Mat4<cplx>;
using Vec4d = Vec4<double>;
using Vec4c = Vec4<cplx>;
using Mat16c = Mat16<cplx>;
using Vec16c = Vec16<cplx>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double infinite_beta = std::numeric_limits<double>::infinity();

// Error categories map onto CLI exit codes.
struct ConfigError : std::runtime_error {
    std::string code;
    ConfigError(std::string c, const std::string& msg) : std::runtime_error(msg), code(std::move(c)) {}
};

struct NumericError : std::runtime_error {
    double estimate = 0.0;
    explicit NumericError(const std::string& msg, double est = 0.0) : std::runtime_error(msg), estimate(est) {}
};

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mixqnm
