#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "af/eval.hpp"
#include "af/labeling.hpp"
#include "af/svm.hpp"

namespace af {

/// Latencies of the cascade stages, all in ms per image. Feature encoding
/// time is folded into the classifier term.
struct TimingProfile {
  double t_generator_ms = 5.0;
  double t_classifier_ms = 0.1;
  double t_basic_ms = 20.0;
  double t_partner_ms = 50.0;
};

enum class Route { basic, partner };

struct RoutingResult {
  std::vector<std::pair<std::string, Route>> routes;  // in images order
  std::map<std::string, std::vector<Detection>> routed_detections;
  double fraction_easy_predicted = 0.0;
  double map_routed = 0.0;
  double map_basic = 0.0;
  double map_partner = 0.0;
  double mean_mapi_routed = 0.0;
  double mean_mapi_basic = 0.0;
  double mean_mapi_partner = 0.0;
  double fps = 0.0;          // modeled cascade throughput
  double fps_partner = 0.0;  // partner standalone
  double sur = 0.0;          // (fps - fps_partner) / fps_partner
  double dmap = 0.0;         // map_partner - map_routed
  bool used_measured_latency = false;
};

/// Runs the cascade: top-K proposals -> feature -> classifier -> detector
/// choice per image, then the accuracy and throughput accounting.
/// Expected per-image latency uses measured per-image latencies of the
/// chosen detector when both runs carry them, otherwise the analytic
/// model t_gen + t_clf + p*t_basic + (1-p)*t_partner with p the predicted
/// easy fraction.
RoutingResult route(const LinearModel& model,
                    const std::map<std::string, std::vector<Proposal>>& proposals,
                    const DetectorRun& run_basic, const DetectorRun& run_partner,
                    const std::vector<ImageRecord>& images, const FeatureSpec& spec,
                    const ApConfig& cfg, const TimingProfile& timing);

/// Routing by ground-truth label: the per-image mAPI of the result equals
/// max(P1, P2) on every image, so its mean upper-bounds any learned router.
RoutingResult route_oracle(const std::vector<EasyHardLabel>& labels,
                           const DetectorRun& run_basic, const DetectorRun& run_partner,
                           const std::vector<ImageRecord>& images, const ApConfig& cfg,
                           const std::optional<TimingProfile>& timing = std::nullopt);

struct SweepRow {
  double weight = 0.0;
  double accuracy = 0.0;
  double recall_hard = 0.0;
  double map = 0.0;
  double mean_mapi = 0.0;
  double fps = 0.0;
  double sur = 0.0;
  double dmap = 0.0;
};

struct SweepData {
  std::vector<FeatureVector> train_features;
  std::vector<EasyHard> train_labels;
  std::vector<FeatureVector> eval_features;
  std::vector<EasyHard> eval_labels;
};

/// Trains one model per weight (same seed and config otherwise),
/// evaluates each on the eval split and routes the eval images. Trainings
/// run in parallel; rows come back in input weight order.
std::vector<SweepRow> sweep_weights(
    const std::vector<double>& weights, const SweepData& data,
    const std::map<std::string, std::vector<Proposal>>& proposals,
    const DetectorRun& run_basic, const DetectorRun& run_partner,
    const std::vector<ImageRecord>& eval_images, const FeatureSpec& spec,
    const ApConfig& cfg, const TimingProfile& timing, const TrainConfig& base_cfg);

}  // namespace af
