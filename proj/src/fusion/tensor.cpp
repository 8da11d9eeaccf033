#include "lvl/fusion/tensor.hpp"

#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {

void require_finite(const Tensor2D& t, std::string_view what) {
  if (!t.allFinite()) throw InvariantError("non-finite value in " + std::string(what));
}

void require_shape(const Tensor2D& t, Index rows, Index cols, std::string_view what) {
  if (t.rows() != rows || t.cols() != cols) {
    throw ConfigError(std::string(what) + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", got " + std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
}

Tensor2D random_normal(Rng& rng, Index rows, Index cols, double scale) {
  Tensor2D t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

Tensor2D softmax_rows(const Tensor2D& scores) {
  Tensor2D out(scores.rows(), scores.cols());
  for (Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    out.row(r) = (scores.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Tensor2D vstack(const Tensor2D& top, const Tensor2D& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) throw ConfigError("vstack: column mismatch");
  Tensor2D out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

}  // namespace lvl::fusion
