#pragma once

#include <Eigen/Core>
#include <string_view>

#include "lvl/rng.hpp"

namespace lvl::fusion {

// Row-major 64-bit matrix; every fusion quantity is one of these (gates are 1xH).
using Tensor2D = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// InvariantError naming `what` when any entry is NaN or infinite.
void require_finite(const Tensor2D& t, std::string_view what);
// ConfigError when the shape differs.
void require_shape(const Tensor2D& t, Index rows, Index cols, std::string_view what);

Tensor2D random_normal(Rng& rng, Index rows, Index cols, double scale = 1.0);

// Numerically stable row-wise softmax.
Tensor2D softmax_rows(const Tensor2D& scores);

Tensor2D vstack(const Tensor2D& top, const Tensor2D& bottom);

}  // namespace lvl::fusion
