#include "lvl/fusion/toy_fit.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {
namespace {

struct Sample {
  EmbeddedFeatures feats;
  Tensor2D target;
};

Sample make_sample(Rng& rng, const ToyConfig& cfg, const PeConfig& pe) {
  const int c = cfg.channels;
  ModalityFeatures f = synthetic_features(rng, c, cfg.n_image, cfg.n_point, pe);
  Eigen::RowVectorXd signal(c);
  for (int i = 0; i < c; ++i) signal(i) = rng.normal();
  if (cfg.task == ToyTask::kPointExclusive) {
    f.image = random_normal(rng, cfg.n_image, c);
    f.point = random_normal(rng, cfg.n_point, c, 0.1).rowwise() + signal;
  } else {
    f.image = random_normal(rng, cfg.n_image, c, 0.1).rowwise() + signal;
    f.point = random_normal(rng, cfg.n_point, c);
  }
  Sample s;
  s.feats = embed(f, pe, c);
  s.target = signal.replicate(cfg.n_carrier + cfg.n_instance, 1);
  return s;
}

ModelConfig model_config(const ToyConfig& cfg) {
  ModelConfig m;
  m.channels = cfg.channels;
  m.heads = cfg.heads;
  m.blocks = cfg.blocks;
  m.n_carrier = cfg.n_carrier;
  m.n_instance = cfg.n_instance;
  m.seed = cfg.seed;
  return m;
}

Tensor2D outputs(const ModelParams& p, const MemoryBank& memory, const Sample& s, ModelCache* cache) {
  const ModelOutput o = model_forward(p, memory, s.feats, cache);
  return vstack(o.carrier, o.instance);
}

double mean_loss(const ModelParams& p, const MemoryBank& memory, const std::vector<Sample>& samples) {
  double total = 0.0;
  for (const auto& s : samples) {
    total += 0.5 * (outputs(p, memory, s, nullptr) - s.target).squaredNorm() / static_cast<double>(s.target.size());
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

const char* toy_task_name(ToyTask t) {
  return t == ToyTask::kPointExclusive ? "point_exclusive" : "point_noise";
}

ToyTask toy_task_from_name(const std::string& name) {
  if (name == "point_exclusive") return ToyTask::kPointExclusive;
  if (name == "point_noise") return ToyTask::kPointNoise;
  throw ConfigError("unknown toy task '" + name + "' (expected point_exclusive or point_noise)");
}

void ToyConfig::validate() const {
  if (steps < 1 || batch < 1 || eval_samples < 1) throw ConfigError("toy fit: steps, batch, eval_samples must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("toy fit: learning rate must be > 0");
  if (n_image < 1 || n_point < 1) throw ConfigError("toy fit: both modalities need tokens");
  model_config(*this).validate();
}

double TrainReport::max_abs_gate() const {
  double m = 0.0;
  if (!gate_tanh.empty()) {
    for (double t : gate_tanh.back()) m = std::max(m, std::abs(t));
  }
  return m;
}

double TrainReport::loss_reduction() const { return 1.0 - final_eval_loss / initial_eval_loss; }

nlohmann::ordered_json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = toy_task_name(config.task);
  j["seed"] = config.seed;
  j["steps"] = config.steps;
  j["batch"] = config.batch;
  j["learning_rate"] = config.learning_rate;
  j["channels"] = config.channels;
  j["heads"] = config.heads;
  j["blocks"] = config.blocks;
  j["initial_eval_loss"] = initial_eval_loss;
  j["final_eval_loss"] = final_eval_loss;
  j["loss_reduction"] = loss_reduction();
  j["max_abs_tanh_gate"] = max_abs_gate();
  j["loss"] = loss;
  j["gate_tanh"] = gate_tanh;
  return j;
}

TrainReport toy_fit(const ToyConfig& cfg) {
  cfg.validate();
  TrainReport report;
  report.config = cfg;
  ModelParams params = ModelParams::init(model_config(cfg));
  const PeConfig pe = params.config.pe;
  const MemoryBank memory = MemoryBank::empty(cfg.n_instance, cfg.channels);

  Rng eval_rng(Rng::derive(cfg.seed, 2));
  std::vector<Sample> eval;
  for (int i = 0; i < cfg.eval_samples; ++i) eval.push_back(make_sample(eval_rng, cfg, pe));
  report.initial_eval_loss = mean_loss(params, memory, eval);

  Rng train_rng(Rng::derive(cfg.seed, 1));
  for (int step = 0; step < cfg.steps; ++step) {
    ModelParams grads = params.zeros_like();
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Sample s = make_sample(train_rng, cfg, pe);
      ModelCache cache;
      const Tensor2D out = outputs(params, memory, s, &cache);
      const double norm = static_cast<double>(s.target.size()) * cfg.batch;
      const Tensor2D diff = out - s.target;
      batch_loss += 0.5 * diff.squaredNorm() / norm;
      const ModelParams g = model_backward(params, cache, diff / norm);
      auto acc = grads.parameters();
      const auto src = g.parameters();
      for (std::size_t i = 0; i < acc.size(); ++i) *acc[i].second += *src[i].second;
    }
    if (!std::isfinite(batch_loss)) {
      throw InvariantError("toy fit diverged at step " + std::to_string(step) + " (loss is not finite)");
    }
    report.loss.push_back(batch_loss);
    auto ps = params.parameters();
    const auto gs = grads.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i) *ps[i].second -= cfg.learning_rate * *gs[i].second;
    std::vector<double> taus;
    for (const auto& blk : params.blocks) {
      for (int h = 0; h < blk.gates.heads(); ++h) taus.push_back(blk.gates.tanh_at(h));
    }
    report.gate_tanh.push_back(std::move(taus));
  }
  report.final_eval_loss = mean_loss(params, memory, eval);
  if (!std::isfinite(report.final_eval_loss)) throw InvariantError("toy fit diverged (final loss is not finite)");
  report.final_params = std::move(params);
  return report;
}

std::vector<TrainReport> toy_fit_all(std::span<const ToyConfig> configs) {
  std::vector<TrainReport> out(configs.size());
  const long n = static_cast<long>(configs.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = toy_fit(configs[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace lvl::fusion
