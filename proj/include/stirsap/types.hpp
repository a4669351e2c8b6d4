#pragma once

#include <Eigen/Dense>

#include <complex>

namespace stirsap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double two_pi = 6.283185307179586476925286766559;

inline constexpr const char* tool_version = "0.1.0";

} // namespace stirsap
