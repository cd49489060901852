#include "gpfr/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "gpfr/error.hpp"
#include "gpfr/parallel.hpp"
#include "gpfr/text.hpp"

namespace gpfr::eval {
namespace {

std::vector<float> column(const nn::Tensor<float>& scores, std::size_t c) {
  const std::size_t n = scores.dim(0), k = scores.dim(1);
  std::vector<float> out(n);
  for (std::size_t r = 0; r < n; ++r) out[r] = scores[r * k + c];
  return out;
}

void check_scores(const nn::Tensor<float>& scores, std::size_t classes, std::size_t truth) {
  if (scores.rank() != 2 || scores.dim(1) != classes) throw UsageError("score matrix does not match the class list");
  if (scores.dim(0) != truth) throw UsageError("score matrix rows differ from the number of labels");
}

}  // namespace

AccuracyReport accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (truth.empty()) throw UsageError("accuracy of an empty set");
  if (predicted.size() != truth.size()) throw UsageError("predictions and labels differ in length");
  AccuracyReport r;
  std::map<int, std::size_t> hits;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.per_class_count[truth[i]];
    if (predicted[i] == truth[i]) {
      ++correct;
      ++hits[truth[i]];
    }
  }
  r.overall = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (const auto& [label, count] : r.per_class_count) {
    r.per_class[label] = static_cast<double>(hits[label]) / static_cast<double>(count);
  }
  return r;
}

std::vector<std::size_t> rank_by_score(std::span<const float> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double average_precision(std::span<const std::uint8_t> relevance) noexcept {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (!relevance[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits ? sum / static_cast<double>(hits) : 0.0;
}

std::vector<PrPoint> pr_curve(std::span<const std::uint8_t> relevance) {
  const auto total = static_cast<std::size_t>(std::count_if(relevance.begin(), relevance.end(), [](auto r) { return r != 0; }));
  std::vector<PrPoint> out;
  out.reserve(relevance.size());
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    hits += relevance[k] != 0;
    out.push_back({total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0,
                   static_cast<double>(hits) / static_cast<double>(k + 1)});
  }
  return out;
}

double trapezoid_auc(std::span<const PrPoint> curve) noexcept {
  const auto first = std::find_if(curve.begin(), curve.end(), [](const PrPoint& p) { return p.recall > 0.0; });
  if (first == curve.end()) return 0.0;
  double area = 0.0;
  PrPoint prev{0.0, first->precision};
  for (auto it = first; it != curve.end(); ++it) {
    area += (it->recall - prev.recall) * (it->precision + prev.precision) / 2.0;
    prev = *it;
  }
  return area;
}

std::vector<std::uint8_t> ranked_relevance(const nn::Tensor<float>& scores, std::size_t c, std::span<const int> truth,
                                           int label) {
  const auto col = column(scores, c);
  const auto order = rank_by_score(col);
  std::vector<std::uint8_t> rel(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rel[k] = truth[order[k]] == label;
  return rel;
}

double mean_average_precision(std::span<const ClassRetrieval> classes) noexcept {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : classes) {
    if (!c.relevant) continue;
    sum += c.ap;
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

RetrievalReport retrieval(const nn::Tensor<float>& scores, std::span<const int> classes, std::span<const int> truth,
                          std::size_t threads) {
  check_scores(scores, classes.size(), truth.size());
  RetrievalReport r;
  r.classes.resize(classes.size());
  parallel_for(classes.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto rel = ranked_relevance(scores, c, truth, classes[c]);
      r.classes[c].label = classes[c];
      r.classes[c].ap = average_precision(rel);
      r.classes[c].relevant = static_cast<std::size_t>(std::count(rel.begin(), rel.end(), 1));
    }
  });
  r.excluded = static_cast<std::size_t>(std::count_if(r.classes.begin(), r.classes.end(), [](const auto& c) { return c.relevant == 0; }));
  r.map = mean_average_precision(r.classes);
  return r;
}

std::string pr_curves_csv(const nn::Tensor<float>& scores, std::span<const int> classes, std::span<const int> truth) {
  check_scores(scores, classes.size(), truth.size());
  std::string out = "class,rank,recall,precision\n";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto curve = pr_curve(ranked_relevance(scores, c, truth, classes[c]));
    for (std::size_t k = 0; k < curve.size(); ++k) {
      out += std::to_string(classes[c]) + "," + std::to_string(k + 1) + "," + text::format_double(curve[k].recall) +
             "," + text::format_double(curve[k].precision) + "\n";
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> top_k(const nn::Tensor<float>& scores, std::size_t k) {
  if (scores.rank() != 2) throw UsageError("top_k expects a score matrix");
  std::vector<std::vector<std::size_t>> out(scores.dim(1));
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto order = rank_by_score(column(scores, c));
    order.resize(std::min(k, order.size()));
    out[c] = std::move(order);
  }
  return out;
}

}  // namespace gpfr::eval
