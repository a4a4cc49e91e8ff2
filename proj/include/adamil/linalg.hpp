#pragma once

#include <Eigen/Dense>

namespace adamil {

// Upper bound on state and noise dimension. Vectors and matrices live on the stack,
// so the per-step hot loop never allocates.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

}  // namespace adamil
