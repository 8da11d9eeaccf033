#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "lvl/fusion/model.hpp"

namespace lvl::fusion {

// point_exclusive: the target is a per-sample signal carried only by the
//   point features; image features are noise.
// point_noise: the target is carried by the image features; point features
//   are noise.
enum class ToyTask { kPointExclusive, kPointNoise };

const char* toy_task_name(ToyTask t);
ToyTask toy_task_from_name(const std::string& name);  // ConfigError

struct ToyConfig {
  ToyTask task = ToyTask::kPointExclusive;
  std::uint64_t seed = 0;
  int steps = 500;
  int batch = 32;
  int eval_samples = 64;
  double learning_rate = 0.5;
  int channels = 16;
  int heads = 4;
  int blocks = 1;
  int n_carrier = 2;
  int n_instance = 2;
  int n_image = 32;
  int n_point = 16;

  void validate() const;  // ConfigError
};

struct TrainReport {
  ToyConfig config;
  std::vector<double> loss;                    // training batch loss before each step
  std::vector<std::vector<double>> gate_tanh;  // tanh(g_h) after each step
  double initial_eval_loss = 0.0;
  double final_eval_loss = 0.0;
  ModelParams final_params;

  double max_abs_gate() const;  // final step
  double loss_reduction() const;  // 1 - final/initial eval loss
  nlohmann::ordered_json to_json() const;
};

// Plain gradient descent, one fresh seeded batch per step. Single-threaded and
// bit-reproducible per seed. InvariantError when the loss turns non-finite.
TrainReport toy_fit(const ToyConfig& cfg);
// Independent runs in parallel; results in input order.
std::vector<TrainReport> toy_fit_all(std::span<const ToyConfig> configs);

}  // namespace lvl::fusion
