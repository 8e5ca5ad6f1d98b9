#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace gekln {

// (1/T) * sum (label - pred)^2.
double squared_loss(std::span<const double> preds, std::span<const double> labels);

// Fraction of labels equal to 1[pred >= threshold]; preds are used raw.
double accuracy(std::span<const double> preds, std::span<const double> labels, double threshold = 0.5);

// Root mean squared error; with `clamp`, predictions are clipped to [0, 1] first.
double rmse(std::span<const double> preds, std::span<const double> labels, bool clamp = true);

// Mann-Whitney statistic P(pred+ > pred-) + 0.5 P(pred+ == pred-), from a
// sort and tie-averaged rank sum.
double auc(std::span<const double> preds, std::span<const double> labels);

struct EvalSettings {
  double threshold = 0.5;
  bool clamp_rmse = true;
};

struct MetricsReport {
  double accuracy = 0.0;
  double rmse = 0.0;
  double auc = 0.0;
  std::size_t n_test = 0;
  std::string config_fingerprint;
};

MetricsReport evaluate(std::span<const double> preds, std::span<const double> labels, const EvalSettings& settings);

}  // namespace gekln
