#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "lvl/errors.hpp"
#include "lvl/log.hpp"
#include "lvl/metrics.hpp"

namespace lvl::metrics {
namespace {

using Ngram = std::vector<std::string>;
using Counts = std::map<Ngram, int>;

Counts ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  Counts c;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++c[Ngram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  }
  return c;
}

void check_corpus(std::span<const std::string> c, std::span<const std::string> r, const char* what) {
  if (c.size() != r.size()) throw DomainError(std::string(what) + ": candidate/reference count mismatch");
  if (c.empty()) throw DomainError(std::string(what) + ": empty corpus");
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (u < 128 && std::ispunct(u)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  flush();
  return out;
}

double bleu4(std::span<const std::string> candidates, std::span<const std::string> references) {
  check_corpus(candidates, references, "bleu4");
  std::array<double, 4> matches{}, totals{};
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = tokenize(candidates[i]);
    const auto r = tokenize(references[i]);
    cand_len += static_cast<double>(c.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const Counts cc = ngram_counts(c, n);
      const Counts rc = ngram_counts(r, n);
      for (const auto& [g, count] : cc) {
        auto it = rc.find(g);
        matches[n - 1] += std::min(count, it == rc.end() ? 0 : it->second);
        totals[n - 1] += count;
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (matches[n] == 0.0 || totals[n] == 0.0) return 0.0;
    log_sum += 0.25 * std::log(matches[n] / totals[n]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum);
}

double rouge_l(std::span<const std::string> candidates, std::span<const std::string> references,
               double beta) {
  check_corpus(candidates, references, "rouge_l");
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto c = tokenize(candidates[i]);
    const auto r = tokenize(references[i]);
    if (c.empty() || r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(c, r));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(c.size());
    const double rec = lcs / static_cast<double>(r.size());
    total += (1.0 + beta * beta) * p * rec / (rec + beta * beta * p);
  }
  return total / static_cast<double>(candidates.size());
}

double cider(std::span<const std::string> candidates, std::span<const std::string> references) {
  check_corpus(candidates, references, "cider");
  const std::size_t docs = references.size();
  std::vector<std::array<Counts, 4>> ref_counts(docs), cand_counts(docs);
  std::array<std::map<Ngram, int>, 4> df;
  std::set<std::string> distinct_refs(references.begin(), references.end());
  for (std::size_t i = 0; i < docs; ++i) {
    const auto r = tokenize(references[i]);
    const auto c = tokenize(candidates[i]);
    for (std::size_t n = 0; n < 4; ++n) {
      ref_counts[i][n] = ngram_counts(r, n + 1);
      cand_counts[i][n] = ngram_counts(c, n + 1);
      for (const auto& [g, _] : ref_counts[i][n]) ++df[n][g];
    }
  }
  if (distinct_refs.size() < 2) {
    log::warn("cider: fewer than two distinct reference sets, IDF is degenerate");
  }
  const double log_docs = std::log(static_cast<double>(docs));
  double total = 0.0;
  for (std::size_t i = 0; i < docs; ++i) {
    double per_doc = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
      // Vectors live on the reference vocabulary; unseen candidate n-grams
      // have no component.
      double dot = 0.0, norm_c = 0.0, norm_r = 0.0;
      for (const auto& [g, count] : ref_counts[i][n]) {
        const double idf = log_docs - std::log(static_cast<double>(df[n].at(g)));
        const double wr = count * idf;
        norm_r += wr * wr;
        auto it = cand_counts[i][n].find(g);
        if (it != cand_counts[i][n].end()) dot += (it->second * idf) * wr;
      }
      for (const auto& [g, count] : cand_counts[i][n]) {
        auto it = df[n].find(g);
        if (it == df[n].end()) continue;
        const double wc = count * (log_docs - std::log(static_cast<double>(it->second)));
        norm_c += wc * wc;
      }
      if (norm_c > 0.0 && norm_r > 0.0) per_doc += dot / (std::sqrt(norm_c) * std::sqrt(norm_r));
    }
    total += 10.0 * per_doc / 4.0;
  }
  return total / static_cast<double>(docs);
}

TextMetrics evaluate_text(std::span<const std::string> candidates,
                          std::span<const std::string> references) {
  TextMetrics m;
  m.samples = candidates.size();
  m.bleu4 = bleu4(candidates, references);
  m.rouge_l = rouge_l(candidates, references);
  m.cider = cider(candidates, references);
  return m;
}

}  // namespace lvl::metrics
