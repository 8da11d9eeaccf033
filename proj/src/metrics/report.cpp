#include <cmath>
#include <cstdio>
#include <sstream>

#include "lvl/metrics.hpp"

namespace lvl::metrics {
namespace {

using nlohmann::ordered_json;

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json horizon_json(const HorizonValues& h) {
  ordered_json j;
  j["1s"] = number_or_null(h.at_1s());
  j["2s"] = number_or_null(h.at_2s());
  j["3s"] = number_or_null(h.at_3s());
  j["avg"] = number_or_null(h.avg());
  ordered_json steps = ordered_json::array();
  for (double v : h.per_step) steps.push_back(number_or_null(v));
  j["per_step"] = std::move(steps);
  return j;
}

std::string cell(double v, int precision) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// Renders rows with every column padded to its widest cell.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& r : rows) {
    if (widths.size() < r.size()) widths.resize(r.size(), 0);
    for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c > 0) line += "  ";
      line += c == 0 ? r[c] + std::string(widths[c] - r[c].size(), ' ')
                     : std::string(widths[c] - r[c].size(), ' ') + r[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

ordered_json report_to_json(const MetricsReport& report) {
  ordered_json j = ordered_json::object();
  if (report.planning) {
    const auto& p = *report.planning;
    ordered_json pj;
    pj["samples"] = p.samples;
    pj["unparseable"] = p.unparseable;
    pj["l2_m"] = horizon_json(p.l2);
    pj["collision_pct"] = horizon_json(p.collision_rate);
    pj["intersection_pct"] = horizon_json(p.intersection_rate);
    j["planning"] = std::move(pj);
  }
  if (report.grounding) {
    const auto& g = *report.grounding;
    ordered_json gj;
    gj["samples"] = g.samples;
    gj["parse_failures"] = g.parse_failures;
    ordered_json bins = ordered_json::object();
    for (std::size_t b = 0; b < 4; ++b) {
      ordered_json bj;
      bj["count"] = g.bin_count[b];
      bj["iou"] = g.bin_iou[b] ? ordered_json(*g.bin_iou[b]) : ordered_json(nullptr);
      bins[distance_bin_label(b)] = std::move(bj);
    }
    gj["bins"] = std::move(bins);
    gj["miou"] = number_or_null(g.miou);
    j["grounding"] = std::move(gj);
  }
  if (report.text) {
    const auto& t = *report.text;
    ordered_json tj;
    tj["samples"] = t.samples;
    tj["bleu4"] = t.bleu4;
    tj["rouge_l"] = t.rouge_l;
    tj["cider"] = t.cider;
    j["text"] = std::move(tj);
  }
  return j;
}

std::string report_to_table(const MetricsReport& report) {
  std::string out;
  if (report.planning) {
    const auto& p = *report.planning;
    std::vector<std::vector<std::string>> rows{{"planning", "1s", "2s", "3s", "avg"}};
    auto add = [&](const char* name, const HorizonValues& h, int prec) {
      rows.push_back({name, cell(h.at_1s(), prec), cell(h.at_2s(), prec), cell(h.at_3s(), prec),
                      cell(h.avg(), prec)});
    };
    add("L2 (m)", p.l2, 3);
    add("collision (%)", p.collision_rate, 2);
    add("intersection (%)", p.intersection_rate, 2);
    out += render(rows);
    out += "samples " + std::to_string(p.samples) + ", unparseable " + std::to_string(p.unparseable) + "\n";
  }
  if (report.grounding) {
    if (!out.empty()) out += '\n';
    const auto& g = *report.grounding;
    std::vector<std::vector<std::string>> rows{{"grounding"}, {"IoU"}, {"count"}};
    for (std::size_t b = 0; b < 4; ++b) {
      rows[0].push_back(distance_bin_label(b));
      rows[1].push_back(g.bin_iou[b] ? cell(*g.bin_iou[b], 4) : "n/a");
      rows[2].push_back(std::to_string(g.bin_count[b]));
    }
    rows[0].push_back("mIoU");
    rows[1].push_back(cell(g.miou, 4));
    rows[2].push_back(std::to_string(g.samples));
    out += render(rows);
    out += "parse failures " + std::to_string(g.parse_failures) + "\n";
  }
  if (report.text) {
    if (!out.empty()) out += '\n';
    const auto& t = *report.text;
    out += render({{"text", "BLEU-4", "ROUGE-L", "CIDEr", "samples"},
                   {"score", cell(t.bleu4, 4), cell(t.rouge_l, 4), cell(t.cider, 4),
                    std::to_string(t.samples)}});
  }
  return out;
}

}  // namespace lvl::metrics
