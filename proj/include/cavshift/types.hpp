#pragma once

#include <complex>
#include <Eigen/Dense>

namespace cavshift {

using real = double;
using cplx = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Vec2c = Eigen::Vector2cd;
using Mat2 = Eigen::Matrix2d;
using Mat2c = Eigen::Matrix2cd;

using VecX = Eigen::VectorXd;
using VecXc = Eigen::VectorXcd;
using MatX = Eigen::MatrixXd;
using MatXc = Eigen::MatrixXcd;

// Row-major list of 2D points, one per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 2>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;
inline constexpr cplx I{0.0, 1.0};

// Homogeneous background or inclusion medium.
struct Medium {
    double eps = 1.0;
    double mu = 1.0;
};

inline cplx wavenumber(cplx omega, const Medium& m) { return omega * std::sqrt(m.eps * m.mu); }

}  // namespace cavshift
