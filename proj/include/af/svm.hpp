#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "af/features.hpp"
#include "af/labeling.hpp"

namespace af {

struct TrainConfig {
  double c = 1.0;            // regularization tradeoff
  double weight_hard = 1.0;  // misclassification cost multiplier, y = +1
  double weight_easy = 1.0;  // fixed at 1 in practice
  double tolerance = 1e-4;   // duality gap per example at stop
  int max_epochs = 1000;
  std::uint64_t seed = 1;    // coordinate shuffling
};

struct TrainMeta {
  TrainConfig config;
  long n_easy = 0;
  long n_hard = 0;
  int epochs = 0;
  bool converged = false;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double duality_gap = 0.0;
  // Bias formulation: augmented constant feature of value 1, regularized
  // together with w (the common linear-solver convention). The QP oracle
  // in the tests uses the identical formulation.
  std::string bias_formulation = "augmented-unit-feature-regularized";
  std::vector<double> dual_objective_trace;  // one entry per epoch
};

/// sgn(w.x + b) easy/hard classifier with its training provenance.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::uint64_t spec_hash = 0;
  TrainMeta meta;
};

struct Prediction {
  EasyHard label = EasyHard::easy;
  double margin = 0.0;  // w.x + b
};

struct ClassifierMetrics {
  double accuracy = 0.0;
  double recall_hard = 0.0;
  bool recall_defined = true;  // false when the set has no hard examples
  long tp = 0;                 // hard predicted hard
  long fn = 0;                 // hard predicted easy
  long fp = 0;                 // easy predicted hard
  long tn = 0;                 // easy predicted easy
};

/// Trains the weighted L1-hinge linear SVM
///   min 1/2 w~.w~ + C sum_i c_{y_i} max(0, 1 - y_i (w~.x~_i))
/// over bias-augmented examples x~ = [x, 1], by dual coordinate descent
/// with per-example box constraints scaled by C*c_{y_i}. Deterministic
/// given cfg.seed. Both classes must be present.
LinearModel train(const std::vector<FeatureVector>& features,
                  const std::vector<EasyHard>& labels, const TrainConfig& cfg);

/// Hard iff w.x + b > 0; an exact tie routes to easy.
Prediction predict(const LinearModel& model, const FeatureVector& x);

ClassifierMetrics evaluate_classifier(const LinearModel& model,
                                      const std::vector<FeatureVector>& features,
                                      const std::vector<EasyHard>& labels);

/// Signed per-group weight sums of Table-9 style, normalized so the
/// groups total 1: class bins, conf, xmin, ymin, width, height summed
/// across all K blocks. Requires the 4s box encoding.
struct WeightGroupReport {
  double class_group = 0.0;
  double conf = 0.0;
  double xmin = 0.0;
  double ymin = 0.0;
  double width = 0.0;
  double height = 0.0;
};

WeightGroupReport weight_group_report(const LinearModel& model,
                                      const FeatureSpec& spec);

/// Versioned structured-text persistence; doubles round-trip bit-exactly.
void save_model(const LinearModel& model, const std::string& path);
LinearModel load_model(const std::string& path);

}  // namespace af
