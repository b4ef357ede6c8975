#pragma once

#include <Eigen/Dense>

namespace curegraph {

// Row-major so that a row is one contiguous feature vector.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace curegraph
