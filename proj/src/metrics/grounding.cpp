#include <cmath>

#include "lvl/errors.hpp"
#include "lvl/log.hpp"
#include "lvl/metrics.hpp"

namespace lvl::metrics {
namespace {

struct Outcome {
  double iou = 0.0;
  bool parsed = false;
};

Outcome score(const GroundingSample& s) {
  const auto parsed = codec::parse_object_answer(s.predicted_text);
  if (!parsed) return {};
  return {bev_iou(parsed->to_bev(), s.gt), true};
}

void check(std::span<const GroundingSample> samples) {
  if (samples.empty()) throw DomainError("grounding evaluation: no samples");
  for (const auto& s : samples) {
    if (!(s.gt_distance >= 0.0)) throw DomainError(s.id + ": gt distance must be >= 0");
    if (!(s.gt.length > 0.0 && s.gt.width > 0.0)) throw DomainError(s.id + ": degenerate gt box");
  }
}

GroundingMetrics reduce(std::span<const GroundingSample> samples, std::span<const Outcome> outcomes) {
  GroundingMetrics m;
  m.samples = samples.size();
  std::array<double, 4> sums{};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t bin = distance_bin(samples[i].gt_distance);
    sums[bin] += outcomes[i].iou;
    ++m.bin_count[bin];
    if (!outcomes[i].parsed) ++m.parse_failures;
  }
  double total = 0.0;
  int used = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    if (m.bin_count[b] == 0) {
      log::warn("grounding: distance range ", distance_bin_label(b), " has no samples; excluded from mIoU");
      continue;
    }
    m.bin_iou[b] = sums[b] / static_cast<double>(m.bin_count[b]);
    total += *m.bin_iou[b];
    ++used;
  }
  m.miou = total / used;
  return m;
}

}  // namespace

std::size_t distance_bin(double distance) {
  return std::min<std::size_t>(3, static_cast<std::size_t>(distance / kGroundingBinWidth));
}

const char* distance_bin_label(std::size_t bin) {
  static const char* kLabels[4] = {"0-15m", "15-30m", "30-45m", "45m-inf"};
  return kLabels[std::min<std::size_t>(bin, 3)];
}

double grounding_iou(const GroundingSample& s) { return score(s).iou; }

GroundingMetrics grounding_miou(std::span<const GroundingSample> samples) {
  check(samples);
  std::vector<Outcome> outcomes(samples.size());
  const long n = static_cast<long>(samples.size());
#pragma omp parallel for schedule(dynamic, 16) if (n > 64)
  for (long i = 0; i < n; ++i) outcomes[i] = score(samples[i]);
  return reduce(samples, outcomes);
}

namespace serial {
GroundingMetrics grounding_miou(std::span<const GroundingSample> samples) {
  check(samples);
  std::vector<Outcome> outcomes;
  for (const auto& s : samples) outcomes.push_back(score(s));
  return reduce(samples, outcomes);
}
}  // namespace serial

}  // namespace lvl::metrics
