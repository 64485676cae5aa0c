#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "af/errors.hpp"
#include "af/rng.hpp"
#include "af/svm.hpp"
#include "oracles.hpp"

using namespace af;

namespace {

FeatureVector fv(std::vector<double> values, std::uint64_t hash = 0xfeed) {
  return {std::move(values), hash};
}

struct TinyProblem {
  std::vector<FeatureVector> features;
  std::vector<EasyHard> labels;
  std::vector<std::vector<double>> raw;  // for the oracle
  std::vector<int> y;
};

TinyProblem random_problem(Rng& rng, int max_points = 8, int max_dim = 3) {
  TinyProblem p;
  const int dim = 1 + static_cast<int>(rng.uniform_index(max_dim));
  const int n = 2 + static_cast<int>(rng.uniform_index(max_points - 1));
  bool have_pos = false, have_neg = false;
  for (int i = 0; i < n; ++i) {
    int label;
    if (i == n - 2 && !have_pos)
      label = +1;
    else if (i == n - 1 && !have_neg)
      label = -1;
    else
      label = rng.uniform() < 0.5 ? +1 : -1;
    (label > 0 ? have_pos : have_neg) = true;
    std::vector<double> x(dim);
    for (double& v : x) v = rng.uniform(-2, 2) + (label > 0 ? 0.5 : -0.5);
    p.raw.push_back(x);
    p.features.push_back(fv(x));
    p.labels.push_back(label > 0 ? EasyHard::hard : EasyHard::easy);
    p.y.push_back(label);
  }
  return p;
}

TrainConfig tight_config(double weight_hard = 1.0) {
  TrainConfig cfg;
  cfg.weight_hard = weight_hard;
  cfg.tolerance = 1e-7;
  cfg.max_epochs = 20000;
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("two separable points recover the hand-solved max-margin model") {
  // x = -1 easy, x = +1 hard; with the regularized-bias formulation the
  // optimum is w = 1, b = 0 with zero slack.
  const std::vector<FeatureVector> features{fv({-1.0}), fv({1.0})};
  const std::vector<EasyHard> labels{EasyHard::easy, EasyHard::hard};
  const LinearModel model = train(features, labels, tight_config());
  CHECK(model.weights[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(model.bias == doctest::Approx(0.0).epsilon(1e-3));
  CHECK(model.meta.primal_objective == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(model.meta.converged);

  const Prediction p = predict(model, fv({0.5}));
  CHECK(p.label == EasyHard::hard);
  CHECK(p.margin == doctest::Approx(0.5).epsilon(1e-3));

  const auto oracle = test::reference_weighted_svm({{-1.0}, {1.0}}, {-1, +1}, 1.0, 1.0, 1.0);
  CHECK(model.meta.primal_objective == doctest::Approx(oracle.primal).epsilon(1e-4));
}

TEST_CASE("trainer matches the QP oracle on random tiny problems") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const TinyProblem p = random_problem(rng);
    for (const double w : {1.0, 2.0, 5.13}) {
      const LinearModel model = train(p.features, p.labels, tight_config(w));
      const auto oracle = test::reference_weighted_svm(p.raw, p.y, 1.0, w, 1.0, 60000);
      // Two-sided: close to the oracle's primal, and certified near-optimal
      // via the oracle's dual lower bound.
      CHECK(model.meta.primal_objective <= oracle.primal + 1e-3);
      CHECK(model.meta.primal_objective >= oracle.dual - 1e-3);
    }
  }
}

TEST_CASE("weighted-duplication equivalence") {
  Rng rng(37);
  const TinyProblem p = random_problem(rng, 6, 2);
  const int k = 3;

  TinyProblem dup;
  for (std::size_t i = 0; i < p.features.size(); ++i) {
    const int copies = p.labels[i] == EasyHard::hard ? k : 1;
    for (int c = 0; c < copies; ++c) {
      dup.features.push_back(p.features[i]);
      dup.labels.push_back(p.labels[i]);
    }
  }

  const LinearModel weighted = train(p.features, p.labels, tight_config(k));
  const LinearModel duplicated = train(dup.features, dup.labels, tight_config(1.0));
  CHECK(weighted.meta.primal_objective ==
        doctest::Approx(duplicated.meta.primal_objective).epsilon(1e-4));
}

TEST_CASE("dual objective is non-increasing across epochs") {
  Rng rng(41);
  const TinyProblem p = random_problem(rng);
  const LinearModel model = train(p.features, p.labels, tight_config(2.0));
  const auto& trace = model.meta.dual_objective_trace;
  REQUIRE(!trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("no single-coordinate nudge improves the primal materially") {
  Rng rng(43);
  const TinyProblem p = random_problem(rng);
  const TrainConfig cfg = tight_config(1.0);
  const LinearModel model = train(p.features, p.labels, cfg);

  auto primal_at = [&](const std::vector<double>& w, double b) {
    double obj = 0.5 * b * b;
    for (double v : w) obj += 0.5 * v * v;
    for (std::size_t i = 0; i < p.features.size(); ++i) {
      double margin = b;
      for (std::size_t d = 0; d < w.size(); ++d) margin += w[d] * p.features[i].values[d];
      const double slack = 1.0 - p.y[i] * margin;
      if (slack > 0) obj += cfg.c * slack;
    }
    return obj;
  };

  const double base = primal_at(model.weights, model.bias);
  CHECK(base == doctest::Approx(model.meta.primal_objective).epsilon(1e-9));
  for (std::size_t d = 0; d < model.weights.size(); ++d) {
    for (const double eps : {1e-3, -1e-3}) {
      std::vector<double> w = model.weights;
      w[d] += eps;
      CHECK(primal_at(w, model.bias) >= base - cfg.tolerance * p.features.size());
    }
  }
  for (const double eps : {1e-3, -1e-3})
    CHECK(primal_at(model.weights, model.bias + eps) >=
          base - cfg.tolerance * p.features.size());
}

TEST_CASE("predict edge cases and invariances") {
  LinearModel model;
  model.spec_hash = 0xfeed;
  SUBCASE("all-zero weights with negative bias always say easy") {
    model.weights = {0.0};
    model.bias = -1.0;
    CHECK(predict(model, fv({123.0})).label == EasyHard::easy);
  }
  SUBCASE("positive margin says hard and reports it") {
    model.weights = {1.0};
    model.bias = 0.0;
    const Prediction p = predict(model, fv({2.0}));
    CHECK(p.label == EasyHard::hard);
    CHECK(p.margin == doctest::Approx(2.0));
  }
  SUBCASE("exact zero margin routes to easy") {
    model.weights = {1.0};
    model.bias = 0.0;
    CHECK(predict(model, fv({0.0})).label == EasyHard::easy);
  }
  SUBCASE("sign is invariant under positive rescaling") {
    model.weights = {0.3, -0.7};
    model.bias = 0.2;
    LinearModel scaled = model;
    for (double& w : scaled.weights) w *= 12.5;
    scaled.bias *= 12.5;
    Rng rng(47);
    for (int i = 0; i < 100; ++i) {
      const FeatureVector x = fv({rng.uniform(-3, 3), rng.uniform(-3, 3)});
      CHECK(predict(model, x).label == predict(scaled, x).label);
    }
  }
  SUBCASE("spec hash mismatch is rejected") {
    model.weights = {1.0};
    CHECK_THROWS_AS(predict(model, fv({1.0}, 0xbeef)), ValidationError);
  }
}

TEST_CASE("train input validation") {
  CHECK_THROWS_AS(train({}, {}, TrainConfig{}), ValidationError);
  // single-class input
  CHECK_THROWS_AS(train({fv({1.0}), fv({2.0})}, {EasyHard::easy, EasyHard::easy},
                        TrainConfig{}),
                  ValidationError);
  // mixed spec hashes
  CHECK_THROWS_AS(train({fv({1.0}, 1), fv({2.0}, 2)}, {EasyHard::easy, EasyHard::hard},
                        TrainConfig{}),
                  ValidationError);
}

TEST_CASE("evaluate_classifier counts match a direct tally") {
  LinearModel model;
  model.spec_hash = 0xfeed;
  model.weights = {1.0};
  model.bias = 0.0;

  SUBCASE("all correct") {
    const ClassifierMetrics m = evaluate_classifier(
        model, {fv({1.0}), fv({-1.0})}, {EasyHard::hard, EasyHard::easy});
    CHECK(m.accuracy == 1.0);
    CHECK(m.recall_hard == 1.0);
  }
  SUBCASE("the constant-easy classifier on an 80/20 split") {
    LinearModel lazy;
    lazy.spec_hash = 0xfeed;
    lazy.weights = {0.0};
    lazy.bias = -1.0;
    std::vector<FeatureVector> xs;
    std::vector<EasyHard> ys;
    for (int i = 0; i < 10; ++i) {
      xs.push_back(fv({static_cast<double>(i)}));
      ys.push_back(i < 8 ? EasyHard::easy : EasyHard::hard);
    }
    const ClassifierMetrics m = evaluate_classifier(lazy, xs, ys);
    CHECK(m.accuracy == doctest::Approx(0.8));
    CHECK(m.recall_hard == 0.0);
    CHECK(m.recall_defined);
  }
  SUBCASE("no hard examples flags undefined recall") {
    const ClassifierMetrics m =
        evaluate_classifier(model, {fv({-1.0})}, {EasyHard::easy});
    CHECK(m.recall_hard == 1.0);
    CHECK_FALSE(m.recall_defined);
  }
  SUBCASE("random confusion counts agree with a counting oracle") {
    Rng rng(53);
    std::vector<FeatureVector> xs;
    std::vector<EasyHard> ys;
    long tp = 0, fn = 0, fp = 0, tn = 0;
    for (int i = 0; i < 200; ++i) {
      const double x = rng.uniform(-2, 2);
      const bool hard = rng.uniform() < 0.3;
      xs.push_back(fv({x}));
      ys.push_back(hard ? EasyHard::hard : EasyHard::easy);
      const bool predicted_hard = x > 0.0;
      tp += hard && predicted_hard;
      fn += hard && !predicted_hard;
      fp += !hard && predicted_hard;
      tn += !hard && !predicted_hard;
    }
    const ClassifierMetrics m = evaluate_classifier(model, xs, ys);
    CHECK(m.tp == tp);
    CHECK(m.fn == fn);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.accuracy == doctest::Approx(static_cast<double>(tp + tn) / 200.0));
  }
}

TEST_CASE("weight_group_report") {
  FeatureSpec spec;
  spec.n_classes = 3;
  spec.k = 2;

  SUBCASE("hand-built model with weight only on conf slots") {
    LinearModel model;
    model.spec_hash = spec.hash();
    model.weights.assign(spec.dimension(), 0.0);
    model.weights[3] = 0.7;  // conf of block 0
    model.weights[8] = 0.3;  // conf of block 1
    const WeightGroupReport r = weight_group_report(model, spec);
    CHECK(r.conf == doctest::Approx(1.0));
    CHECK(r.class_group == 0.0);
    CHECK(r.xmin == 0.0);
    CHECK(r.width == 0.0);
  }
  SUBCASE("all-equal weights split by group size and sum to one") {
    LinearModel model;
    model.spec_hash = spec.hash();
    model.weights.assign(spec.dimension(), 1.0);
    const WeightGroupReport r = weight_group_report(model, spec);
    const double dims = spec.dimension();
    CHECK(r.class_group == doctest::Approx(3.0 / dims));
    CHECK(r.conf == doctest::Approx(2.0 / dims));
    CHECK(r.xmin == doctest::Approx(2.0 / dims));
    CHECK(r.class_group + r.conf + r.xmin + r.ymin + r.width + r.height ==
          doctest::Approx(1.0));
  }
  SUBCASE("signed sums survive normalization") {
    LinearModel model;
    model.spec_hash = spec.hash();
    model.weights.assign(spec.dimension(), 0.0);
    model.weights[3] = 2.0;                      // conf block 0
    model.weights[3 + 3] = -1.0;                 // width block 0
    const WeightGroupReport r = weight_group_report(model, spec);
    CHECK(r.conf == doctest::Approx(2.0));
    CHECK(r.width == doctest::Approx(-1.0));
  }
  SUBCASE("4c encoding is unsupported") {
    FeatureSpec corners = spec;
    corners.box_encoding = BoxEncoding::corners_4c;
    LinearModel model;
    model.spec_hash = corners.hash();
    model.weights.assign(corners.dimension(), 1.0);
    CHECK_THROWS_AS(weight_group_report(model, corners), ValidationError);
  }
}

TEST_CASE("conf dominates when confident proposals carry the signal") {
  // Synthetic set where hard images have systematically higher proposal
  // confidences; the learned weights should concentrate on conf slots.
  FeatureSpec spec;
  spec.n_classes = 2;
  spec.k = 3;
  Rng rng(61);
  std::vector<FeatureVector> xs;
  std::vector<EasyHard> ys;
  for (int i = 0; i < 300; ++i) {
    const bool hard = i % 3 == 0;
    std::vector<double> v(spec.dimension(), 0.0);
    v[static_cast<int>(rng.uniform_index(2))] = 3.0;  // histogram noise
    for (int b = 0; b < spec.k; ++b) {
      const std::size_t base = spec.histogram_dim() + b * spec.block_dim();
      v[base] = hard ? rng.uniform(0.7, 1.0) : rng.uniform(0.1, 0.4);  // conf
      v[base + 1] = rng.uniform();
      v[base + 2] = rng.uniform();
      v[base + 3] = rng.uniform(0.2, 0.4);
      v[base + 4] = rng.uniform(0.2, 0.4);
    }
    xs.push_back({std::move(v), spec.hash()});
    ys.push_back(hard ? EasyHard::hard : EasyHard::easy);
  }
  TrainConfig cfg;
  cfg.weight_hard = 2.0;
  cfg.tolerance = 1e-5;
  cfg.max_epochs = 4000;
  const LinearModel model = train(xs, ys, cfg);
  const WeightGroupReport r = weight_group_report(model, spec);
  for (const double other : {r.class_group, r.xmin, r.ymin, r.width, r.height})
    CHECK(std::fabs(r.conf) > std::fabs(other));
  CHECK(r.conf > 0.0);
}

TEST_CASE("balanced weight raises hard recall on an overlapping imbalanced set") {
  // 1-D overlapping classes, 5:1 imbalance. At weight 1 the cheap
  // solution ignores most hard points; the balanced weight must recover
  // recall. The QP oracle confirms the same trend at the optimum.
  Rng rng(71);
  std::vector<FeatureVector> xs;
  std::vector<EasyHard> ys;
  std::vector<std::vector<double>> raw;
  std::vector<int> raw_y;
  for (int i = 0; i < 180; ++i) {
    const bool hard = i % 6 == 0;
    const double x = hard ? rng.normal(0.5, 1.0) : rng.normal(-1.0, 1.0);
    xs.push_back(fv({x}));
    ys.push_back(hard ? EasyHard::hard : EasyHard::easy);
    raw.push_back({x});
    raw_y.push_back(hard ? +1 : -1);
  }
  const double balanced = 5.0;
  const ClassifierMetrics at_one =
      evaluate_classifier(train(xs, ys, tight_config(1.0)), xs, ys);
  const ClassifierMetrics at_balanced =
      evaluate_classifier(train(xs, ys, tight_config(balanced)), xs, ys);
  CHECK(at_balanced.recall_hard >= at_one.recall_hard);
  CHECK(at_balanced.recall_hard > 0.5);

  auto oracle_recall = [&](double w) {
    const auto sol = test::reference_weighted_svm(raw, raw_y, 1.0, w, 1.0, 60000);
    long tp = 0, n_hard = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw_y[i] < 0) continue;
      ++n_hard;
      if (sol.w_aug[0] * raw[i][0] + sol.w_aug[1] > 0) ++tp;
    }
    return static_cast<double>(tp) / n_hard;
  };
  CHECK(oracle_recall(balanced) >= oracle_recall(1.0));
}

TEST_CASE("model persistence round-trips bit-exactly") {
  Rng rng(67);
  const TinyProblem p = random_problem(rng);
  TrainConfig cfg = tight_config(5.13);
  const LinearModel model = train(p.features, p.labels, cfg);

  const std::string path =
      (std::filesystem::temp_directory_path() / "af_model_roundtrip.json").string();
  save_model(model, path);
  const LinearModel loaded = load_model(path);
  std::filesystem::remove(path);

  CHECK(loaded.weights == model.weights);
  CHECK(loaded.bias == model.bias);
  CHECK(loaded.spec_hash == model.spec_hash);
  CHECK(loaded.meta.config.weight_hard == model.meta.config.weight_hard);
  CHECK(loaded.meta.config.seed == model.meta.config.seed);
  CHECK(loaded.meta.primal_objective == model.meta.primal_objective);
  CHECK(loaded.meta.converged == model.meta.converged);
}
