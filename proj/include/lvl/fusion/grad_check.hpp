#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lvl/fusion/model.hpp"

namespace lvl::fusion {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double max_abs_error = 0.0;
  std::vector<double> numeric;
  std::vector<double> rel_errors;

  // Every coordinate satisfies |a - n| <= rtol * max(|a|, |n|) + atol.
  bool within(std::span<const double> analytic, double rtol, double atol) const;
};

using FlatLoss = std::function<double(std::span<const double>)>;

// Central differences at every coordinate of x; relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). `loss` must be safe to call
// concurrently. InvariantError on a non-finite loss.
GradCheckResult numeric_grad_check(std::span<const double> x, std::span<const double> analytic,
                                   const FlatLoss& loss, double eps = 1e-5);
namespace serial {
GradCheckResult numeric_grad_check(std::span<const double> x, std::span<const double> analytic,
                                   const FlatLoss& loss, double eps = 1e-5);
}

struct ModelCheckConfig {
  ModelConfig model;  // defaults: C=16, H=4, 2 blocks, 3 + 3 tokens
  int n_image = 8;
  int n_point = 5;
  bool with_memory = true;
  double gate_scale = 0.5;  // gates drawn N(0, gate_scale); 0 keeps them at init
  double eps = 1e-5;
};

struct ModelCheckReport {
  GradCheckResult result;
  std::vector<double> analytic;
  std::vector<std::pair<std::string, double>> per_parameter;  // max rel error per array
  std::string worst_parameter;
};

// Loss sum(R * (out(x) - out(x0))) over [carrier; instance] with seeded
// random weights R.
ModelCheckReport check_model_gradients(const ModelCheckConfig& cfg);

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

// The suite behind `fusion check`.
std::vector<CheckOutcome> run_check_suite();

}  // namespace lvl::fusion
