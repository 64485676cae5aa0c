#include "af/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "af/errors.hpp"
#include "af/io.hpp"
#include "af/rng.hpp"

namespace af {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Primal objective over bias-augmented examples; w_aug includes the bias
// as its last coordinate.
double primal_objective(const std::vector<std::vector<double>>& x_aug,
                        const std::vector<int>& y, const std::vector<double>& cost,
                        const std::vector<double>& w_aug) {
  double obj = 0.5 * dot(w_aug, w_aug);
  for (std::size_t i = 0; i < x_aug.size(); ++i) {
    const double slack = 1.0 - y[i] * dot(w_aug, x_aug[i]);
    if (slack > 0.0) obj += cost[i] * slack;
  }
  return obj;
}

}  // namespace

// Dual coordinate descent for the L1-loss SVM dual
//   min_a 1/2 a^T Q a - e^T a,  0 <= a_i <= C*c_{y_i},
// with Q_ij = y_i y_j x~_i.x~_j over bias-augmented examples.
// One coordinate step: a_i <- clip(a_i - G/Q_ii, 0, U_i) with
// G = y_i w~.x~_i - 1, maintaining w~ = sum_i a_i y_i x~_i.
// Stops when the duality gap drops to tolerance * n.
LinearModel train(const std::vector<FeatureVector>& features,
                  const std::vector<EasyHard>& labels, const TrainConfig& cfg) {
  if (features.empty()) throw ValidationError("train: empty training set");
  if (features.size() != labels.size())
    throw ValidationError("train: feature/label count mismatch");
  if (cfg.c <= 0.0 || cfg.weight_hard <= 0.0 || cfg.weight_easy <= 0.0)
    throw ValidationError("train: c and class weights must be positive");
  if (cfg.tolerance <= 0.0) throw ValidationError("train: tolerance must be positive");

  const std::size_t n = features.size();
  const std::uint64_t spec_hash = features[0].spec_hash;
  const std::size_t dim = features[0].values.size();
  for (const auto& f : features) {
    if (f.spec_hash != spec_hash)
      throw ValidationError("train: mixed feature specs in training set");
    if (f.values.size() != dim) throw ValidationError("train: ragged feature dimensions");
  }

  long n_easy = 0, n_hard = 0;
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(labels[i]);
    (labels[i] == EasyHard::hard ? n_hard : n_easy)++;
  }
  if (n_easy == 0 || n_hard == 0)
    throw ValidationError("train: both classes must be present (easy=" +
                          std::to_string(n_easy) + ", hard=" + std::to_string(n_hard) + ")");

  // Bias via an augmented constant feature of value 1.
  std::vector<std::vector<double>> x_aug(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_aug[i] = features[i].values;
    x_aug[i].push_back(1.0);
  }

  std::vector<double> cost(n), upper(n), q_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    cost[i] = cfg.c * (y[i] > 0 ? cfg.weight_hard : cfg.weight_easy);
    upper[i] = cost[i];
    q_diag[i] = dot(x_aug[i], x_aug[i]);  // >= 1 thanks to the bias feature
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w_aug(dim + 1, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainMeta meta;
  meta.config = cfg;
  meta.n_easy = n_easy;
  meta.n_hard = n_hard;

  const double gap_target = cfg.tolerance * static_cast<double>(n);
  double primal = 0.0, dual = 0.0, gap = 0.0;

  int epoch = 0;
  for (; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates from a per-epoch substream keeps runs reproducible.
    Rng rng = Rng::substream(cfg.seed, "svm-epoch", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i-- > 1;) {
      const std::size_t j = rng.uniform_index(i + 1);
      std::swap(order[i], order[j]);
    }

    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t i = order[s];
      const double g = y[i] * dot(w_aug, x_aug[i]) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0 && g >= 0.0) pg = 0.0;
      if (alpha[i] >= upper[i] && g <= 0.0) pg = 0.0;
      if (std::fabs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(alpha[i] - g / q_diag[i], 0.0, upper[i]);
        const double delta = (alpha[i] - old) * y[i];
        for (std::size_t d = 0; d <= dim; ++d) w_aug[d] += delta * x_aug[i][d];
      }
    }

    const double w_norm_sq = dot(w_aug, w_aug);
    double alpha_sum = 0.0;
    for (double a : alpha) alpha_sum += a;
    dual = 0.5 * w_norm_sq - alpha_sum;  // minimization form
    primal = primal_objective(x_aug, y, cost, w_aug);
    gap = primal - (-dual);
    meta.dual_objective_trace.push_back(dual);

    if (gap <= gap_target) {
      ++epoch;
      meta.converged = true;
      break;
    }
  }

  meta.epochs = epoch;
  meta.primal_objective = primal;
  meta.dual_objective = -dual;
  meta.duality_gap = gap;

  LinearModel model;
  model.bias = w_aug[dim];
  w_aug.pop_back();
  model.weights = std::move(w_aug);
  model.spec_hash = spec_hash;
  model.meta = std::move(meta);
  return model;
}

Prediction predict(const LinearModel& model, const FeatureVector& x) {
  if (x.spec_hash != model.spec_hash)
    throw ValidationError("predict: feature spec hash does not match the model");
  if (x.values.size() != model.weights.size())
    throw ValidationError("predict: feature dimension " + std::to_string(x.values.size()) +
                          " vs model " + std::to_string(model.weights.size()));
  const double margin = dot(model.weights, x.values) + model.bias;
  return {margin > 0.0 ? EasyHard::hard : EasyHard::easy, margin};
}

ClassifierMetrics evaluate_classifier(const LinearModel& model,
                                      const std::vector<FeatureVector>& features,
                                      const std::vector<EasyHard>& labels) {
  if (features.empty() || features.size() != labels.size())
    throw ValidationError("evaluate_classifier: empty or mismatched inputs");
  ClassifierMetrics m;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const bool predicted_hard = predict(model, features[i]).label == EasyHard::hard;
    const bool is_hard = labels[i] == EasyHard::hard;
    if (is_hard && predicted_hard) ++m.tp;
    if (is_hard && !predicted_hard) ++m.fn;
    if (!is_hard && predicted_hard) ++m.fp;
    if (!is_hard && !predicted_hard) ++m.tn;
  }
  const long n = m.tp + m.fn + m.fp + m.tn;
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  const long n_hard = m.tp + m.fn;
  if (n_hard > 0) {
    m.recall_hard = static_cast<double>(m.tp) / n_hard;
  } else {
    m.recall_hard = 1.0;
    m.recall_defined = false;
  }
  return m;
}

WeightGroupReport weight_group_report(const LinearModel& model,
                                      const FeatureSpec& spec) {
  if (spec.box_encoding != BoxEncoding::size_4s)
    throw ValidationError("weight_group_report: requires the 4s box encoding");
  if (spec.hash() != model.spec_hash)
    throw ValidationError("weight_group_report: spec hash does not match the model");
  if (static_cast<int>(model.weights.size()) != spec.dimension())
    throw ValidationError("weight_group_report: weight length does not match spec");

  WeightGroupReport report;
  for (int i = 0; i < spec.histogram_dim(); ++i) report.class_group += model.weights[i];

  std::size_t offset = spec.histogram_dim();
  for (int block = 0; block < spec.k; ++block) {
    std::size_t pos = offset;
    if (spec.class_encoding == ClassEncoding::per_proposal_prob)
      for (int c = 0; c < spec.n_classes; ++c) report.class_group += model.weights[pos++];
    if (spec.include_conf) report.conf += model.weights[pos++];
    report.xmin += model.weights[pos++];
    report.ymin += model.weights[pos++];
    report.width += model.weights[pos++];
    report.height += model.weights[pos++];
    offset += spec.block_dim();
  }

  const double total = report.class_group + report.conf + report.xmin +
                       report.ymin + report.width + report.height;
  if (total == 0.0)
    throw ValidationError("weight_group_report: weight sum is zero, cannot normalize");
  report.class_group /= total;
  report.conf /= total;
  report.xmin /= total;
  report.ymin /= total;
  report.width /= total;
  report.height /= total;
  return report;
}

namespace {
constexpr int kModelFormatVersion = 1;
}

void save_model(const LinearModel& model, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["spec_hash"] = spec_hash_to_hex(model.spec_hash);
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["train_config"] = {{"c", model.meta.config.c},
                       {"weight_hard", model.meta.config.weight_hard},
                       {"weight_easy", model.meta.config.weight_easy},
                       {"tolerance", model.meta.config.tolerance},
                       {"max_epochs", model.meta.config.max_epochs},
                       {"seed", model.meta.config.seed}};
  j["train_meta"] = {{"n_easy", model.meta.n_easy},
                     {"n_hard", model.meta.n_hard},
                     {"epochs", model.meta.epochs},
                     {"converged", model.meta.converged},
                     {"primal_objective", model.meta.primal_objective},
                     {"dual_objective", model.meta.dual_objective},
                     {"duality_gap", model.meta.duality_gap},
                     {"bias_formulation", model.meta.bias_formulation}};
  write_file_atomic(path, j.dump(2) + "\n");
}

LinearModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file '" + path + "': " + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
    throw ValidationError("model file '" + path + "': unsupported format version");
  LinearModel model;
  model.spec_hash = spec_hash_from_hex(j.at("spec_hash").get<std::string>(),
                                       "model file '" + path + "'");
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  const auto& tc = j.at("train_config");
  model.meta.config.c = tc.at("c").get<double>();
  model.meta.config.weight_hard = tc.at("weight_hard").get<double>();
  model.meta.config.weight_easy = tc.at("weight_easy").get<double>();
  model.meta.config.tolerance = tc.at("tolerance").get<double>();
  model.meta.config.max_epochs = tc.at("max_epochs").get<int>();
  model.meta.config.seed = tc.at("seed").get<std::uint64_t>();
  const auto& tm = j.at("train_meta");
  model.meta.n_easy = tm.at("n_easy").get<long>();
  model.meta.n_hard = tm.at("n_hard").get<long>();
  model.meta.epochs = tm.at("epochs").get<int>();
  model.meta.converged = tm.at("converged").get<bool>();
  model.meta.primal_objective = tm.at("primal_objective").get<double>();
  model.meta.dual_objective = tm.at("dual_objective").get<double>();
  model.meta.duality_gap = tm.at("duality_gap").get<double>();
  model.meta.bias_formulation = tm.at("bias_formulation").get<std::string>();
  return model;
}

}  // namespace af
