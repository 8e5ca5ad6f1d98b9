#include "gekln/metrics.hpp"

#include "gekln/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gekln {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  if (a.empty()) throw LengthMismatch(0, 0);
}

}  // namespace

double squared_loss(std::span<const double> preds, std::span<const double> labels) {
  check_lengths(preds, labels);
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double r = labels[i] - preds[i];
    acc += r * r;
  }
  return acc / static_cast<double>(preds.size());
}

double accuracy(std::span<const double> preds, std::span<const double> labels, double threshold) {
  check_lengths(preds, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double predicted = preds[i] >= threshold ? 1.0 : 0.0;
    if (predicted == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double rmse(std::span<const double> preds, std::span<const double> labels, bool clamp) {
  check_lengths(preds, labels);
  if (!clamp) return std::sqrt(squared_loss(preds, labels));
  std::vector<double> clipped(preds.begin(), preds.end());
  for (double& p : clipped) p = std::clamp(p, 0.0, 1.0);
  return std::sqrt(squared_loss(clipped, labels));
}

double auc(std::span<const double> preds, std::span<const double> labels) {
  check_lengths(preds, labels);
  const std::size_t n = preds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return preds[a] < preds[b]; });

  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && preds[order[j]] == preds[order[i]]) ++j;
    // ranks i+1 .. j share their average
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1.0) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateLabels();
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricsReport evaluate(std::span<const double> preds, std::span<const double> labels, const EvalSettings& settings) {
  MetricsReport r;
  r.accuracy = accuracy(preds, labels, settings.threshold);
  r.rmse = rmse(preds, labels, settings.clamp_rmse);
  r.auc = auc(preds, labels);
  r.n_test = preds.size();
  return r;
}

}  // namespace gekln
