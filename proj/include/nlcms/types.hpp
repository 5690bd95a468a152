#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace nlcms {

using cplx = std::complex<double>;

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;

/// Power ratio from decibels.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace nlcms
