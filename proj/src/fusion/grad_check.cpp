#include "lvl/fusion/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "lvl/errors.hpp"

namespace lvl::fusion {
namespace {

double probe(std::vector<double>& x, std::size_t i, const FlatLoss& loss, double eps) {
  const double orig = x[i];
  x[i] = orig + eps;
  const double up = loss(x);
  x[i] = orig - eps;
  const double down = loss(x);
  x[i] = orig;
  if (!std::isfinite(up) || !std::isfinite(down)) {
    throw InvariantError("gradient check: non-finite loss when probing coordinate " + std::to_string(i));
  }
  return (up - down) / (2.0 * eps);
}

void prepare(std::span<const double> x, std::span<const double> analytic, const FlatLoss& loss, double eps) {
  if (x.size() != analytic.size()) throw ConfigError("gradient check: size mismatch");
  if (!(eps > 0.0)) throw ConfigError("gradient check: eps must be > 0");
  const double base = loss(x);
  if (!std::isfinite(base)) throw InvariantError("gradient check: non-finite loss at the check point");
}

void finish(std::span<const double> analytic, GradCheckResult& r) {
  r.rel_errors.resize(r.numeric.size());
  for (std::size_t i = 0; i < r.numeric.size(); ++i) {
    const double a = analytic[i];
    const double n = r.numeric[i];
    r.rel_errors[i] = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    r.max_abs_error = std::max(r.max_abs_error, std::abs(a - n));
    if (r.rel_errors[i] > r.max_rel_error) {
      r.max_rel_error = r.rel_errors[i];
      r.worst_index = i;
    }
  }
}

}  // namespace

bool GradCheckResult::within(std::span<const double> analytic, double rtol, double atol) const {
  if (analytic.size() != numeric.size()) return false;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    if (std::abs(a - n) > rtol * std::max(std::abs(a), std::abs(n)) + atol) return false;
  }
  return true;
}

GradCheckResult numeric_grad_check(std::span<const double> x, std::span<const double> analytic,
                                   const FlatLoss& loss, double eps) {
  prepare(x, analytic, loss, eps);
  GradCheckResult r;
  r.numeric.assign(x.size(), 0.0);
  const long n = static_cast<long>(x.size());
  std::exception_ptr error;
#pragma omp parallel
  {
    std::vector<double> local(x.begin(), x.end());
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      try {
        r.numeric[static_cast<std::size_t>(i)] = probe(local, static_cast<std::size_t>(i), loss, eps);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  finish(analytic, r);
  return r;
}

namespace serial {
GradCheckResult numeric_grad_check(std::span<const double> x, std::span<const double> analytic,
                                   const FlatLoss& loss, double eps) {
  prepare(x, analytic, loss, eps);
  GradCheckResult r;
  std::vector<double> local(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) r.numeric.push_back(probe(local, i, loss, eps));
  finish(analytic, r);
  return r;
}
}  // namespace serial

ModelCheckReport check_model_gradients(const ModelCheckConfig& cfg) {
  ModelParams params = ModelParams::init(cfg.model);
  Rng rng(Rng::derive(cfg.model.seed, 0x6772616463686bULL));
  if (cfg.gate_scale > 0.0) {
    for (auto& b : params.blocks) b.gates.g = random_normal(rng, 1, cfg.model.heads, cfg.gate_scale);
  }
  const int c = cfg.model.channels;
  const EmbeddedFeatures feats =
      embed(synthetic_features(rng, c, cfg.n_image, cfg.n_point, cfg.model.pe), cfg.model.pe, c);
  MemoryBank memory = MemoryBank::empty(cfg.model.n_instance, c);
  if (cfg.with_memory) {
    memory.tokens = random_normal(rng, cfg.model.n_instance, c);
    memory.active = true;
  }
  const Tensor2D weights = random_normal(rng, cfg.model.n_tokens(), c);

  auto output = [&](const ModelParams& p, ModelCache* cache) {
    const ModelOutput o = model_forward(p, memory, feats, cache);
    return vstack(o.carrier, o.instance);
  };
  ModelCache cache;
  const Tensor2D base = output(params, &cache);
  // Random projection of the output change: the loss is 0 at the check point
  // and its rounding error stays far below the finite-difference signal.
  const FlatLoss loss = [&](std::span<const double> flat) {
    ModelParams p = params;
    unflatten(flat, p);
    return ((output(p, nullptr) - base).array() * weights.array()).sum();
  };

  const ModelParams grads = model_backward(params, cache, weights);
  const std::vector<double> x = flatten(params);
  const std::vector<double> analytic = flatten(grads);

  ModelCheckReport report;
  report.result = numeric_grad_check(x, analytic, loss, cfg.eps);
  report.analytic = analytic;
  std::size_t off = 0;
  for (const auto& [name, t] : params.parameters()) {
    const auto n = static_cast<std::size_t>(t->size());
    const auto first = report.result.rel_errors.begin() + static_cast<long>(off);
    const double worst = n == 0 ? 0.0 : *std::max_element(first, first + static_cast<long>(n));
    report.per_parameter.emplace_back(name, worst);
    if (report.result.worst_index >= off && report.result.worst_index < off + n) report.worst_parameter = name;
    off += n;
  }
  return report;
}

namespace {

// Max |gated(g=0) - image_only| over random configurations; exact equality
// is expected, so any nonzero value fails.
double gate_zero_deviation(int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::derive(1000, static_cast<std::uint64_t>(t)));
    const int heads = 1 + static_cast<int>(rng.index(4));
    const int c = heads * 6;
    PeConfig pe;
    const auto attn = AttnParams::random(rng, c, heads);
    const Tensor2D tokens = random_normal(rng, 1 + static_cast<Index>(rng.index(6)), c);
    const Tensor2D ref_pe = pe_3d(grid_reference_points(static_cast<int>(tokens.rows()), pe.extent), pe, c);
    const auto feats = embed(synthetic_features(rng, c, 1 + static_cast<int>(rng.index(10)),
                                                static_cast<int>(rng.index(8)), pe),
                             pe, c);
    const Tensor2D gated = gated_cross_attend(tokens, ref_pe, feats, attn, GateParams::zeros(heads));
    const Tensor2D image = image_only_attend(tokens, ref_pe, feats.image, feats.image_pe, attn);
    worst = std::max(worst, (gated - image).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

std::vector<CheckOutcome> run_check_suite() {
  std::vector<CheckOutcome> out;
  auto strict = [&](const std::string& name, const ModelCheckConfig& cfg) {
    const auto r = check_model_gradients(cfg);
    out.push_back({name + " (max rel error)", r.result.max_rel_error, 1e-4, r.result.max_rel_error < 1e-4});
  };
  strict("grad_check reference model", {});
  ModelCheckConfig zero_gates;
  zero_gates.gate_scale = 0.0;
  strict("grad_check gates at init", zero_gates);
  {
    // Without memory, block-1 self-attention keys are nearly identical rows
    // and some key gradients sit near the finite-difference rounding floor,
    // so this one is judged with an absolute allowance.
    ModelCheckConfig cfg;
    cfg.with_memory = false;
    cfg.n_point = 0;
    const auto r = check_model_gradients(cfg);
    out.push_back({"grad_check image only, no memory (max abs error, rtol 1e-4 + atol 1e-9)",
                   r.result.max_abs_error, 1e-9, r.result.within(r.analytic, 1e-4, 1e-9)});
  }
  {
    const double dev = gate_zero_deviation(100);
    out.push_back({"gate-zero exactness (max abs deviation)", dev, 0.0, dev == 0.0});
  }
  return out;
}

}  // namespace lvl::fusion
