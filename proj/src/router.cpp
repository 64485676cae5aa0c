#include "af/router.hpp"

#include <algorithm>

#include "af/errors.hpp"
#include "af/parallel.hpp"

namespace af {

namespace {

void check_coverage(const DetectorRun& run, const std::vector<ImageRecord>& images,
                    const char* role) {
  for (const auto& img : images)
    if (!run.covers(img.image_id))
      throw ValidationError(std::string("route: ") + role + " run missing image '" +
                            img.image_id + "'");
}

bool runs_carry_latency(const DetectorRun& run, const std::vector<ImageRecord>& images) {
  for (const auto& img : images)
    if (run.latency_ms.find(img.image_id) == run.latency_ms.end()) return false;
  return true;
}

/// Shared accounting once per-image routes are decided.
RoutingResult account(const std::vector<ImageRecord>& images,
                      const std::vector<Route>& routes, const DetectorRun& run_basic,
                      const DetectorRun& run_partner, const ApConfig& cfg,
                      const std::optional<TimingProfile>& timing) {
  RoutingResult result;
  DetectorRun routed;
  routed.detector_id = "routed(" + run_basic.detector_id + "|" + run_partner.detector_id + ")";

  long n_easy = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string& id = images[i].image_id;
    const DetectorRun& chosen = routes[i] == Route::basic ? run_basic : run_partner;
    routed.detections[id] = chosen.detections.at(id);
    result.routes.emplace_back(id, routes[i]);
    if (routes[i] == Route::basic) ++n_easy;
  }
  result.fraction_easy_predicted =
      images.empty() ? 0.0 : static_cast<double>(n_easy) / images.size();

  result.map_routed = dataset_map(routed, images, cfg).map;
  result.map_basic = dataset_map(run_basic, images, cfg).map;
  result.map_partner = dataset_map(run_partner, images, cfg).map;
  result.mean_mapi_routed = mean_mapi(run_mapi(routed, images, cfg));
  result.mean_mapi_basic = mean_mapi(run_mapi(run_basic, images, cfg));
  result.mean_mapi_partner = mean_mapi(run_mapi(run_partner, images, cfg));
  result.dmap = result.map_partner - result.map_routed;

  if (timing.has_value()) {
    const TimingProfile& t = *timing;
    const bool measured = runs_carry_latency(run_basic, images) &&
                          runs_carry_latency(run_partner, images) && !images.empty();
    double t_detect;  // mean per-image detector latency along the chosen route
    double t_partner_alone;
    if (measured) {
      double sum = 0.0, sum_partner = 0.0;
      for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string& id = images[i].image_id;
        sum += routes[i] == Route::basic ? run_basic.latency_ms.at(id)
                                         : run_partner.latency_ms.at(id);
        sum_partner += run_partner.latency_ms.at(id);
      }
      t_detect = sum / images.size();
      t_partner_alone = sum_partner / images.size();
      result.used_measured_latency = true;
    } else {
      const double p = result.fraction_easy_predicted;
      t_detect = p * t.t_basic_ms + (1.0 - p) * t.t_partner_ms;
      t_partner_alone = t.t_partner_ms;
    }
    const double total = t.t_generator_ms + t.t_classifier_ms + t_detect;
    result.fps = 1000.0 / total;
    result.fps_partner = 1000.0 / t_partner_alone;
    result.sur = (result.fps - result.fps_partner) / result.fps_partner;
  }

  result.routed_detections = std::move(routed.detections);
  return result;
}

}  // namespace

RoutingResult route(const LinearModel& model,
                    const std::map<std::string, std::vector<Proposal>>& proposals,
                    const DetectorRun& run_basic, const DetectorRun& run_partner,
                    const std::vector<ImageRecord>& images, const FeatureSpec& spec,
                    const ApConfig& cfg, const TimingProfile& timing) {
  check_coverage(run_basic, images, "basic");
  check_coverage(run_partner, images, "partner");
  for (const auto& img : images)
    if (proposals.find(img.image_id) == proposals.end())
      throw ValidationError("route: proposals missing image '" + img.image_id + "'");
  if (model.spec_hash != spec.hash())
    throw ValidationError("route: model spec hash does not match the feature spec");

  std::vector<Route> routes(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const ImageRecord& img = images[i];
    const auto top = select_top_k(proposals.at(img.image_id), spec.k);
    const FeatureVector x = encode(top, img, spec);
    routes[i] = predict(model, x).label == EasyHard::easy ? Route::basic : Route::partner;
  });
  return account(images, routes, run_basic, run_partner, cfg, timing);
}

RoutingResult route_oracle(const std::vector<EasyHardLabel>& labels,
                           const DetectorRun& run_basic, const DetectorRun& run_partner,
                           const std::vector<ImageRecord>& images, const ApConfig& cfg,
                           const std::optional<TimingProfile>& timing) {
  check_coverage(run_basic, images, "basic");
  check_coverage(run_partner, images, "partner");
  std::map<std::string, EasyHard> by_id;
  for (const auto& l : labels) by_id[l.image_id] = l.label;
  std::vector<Route> routes(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto it = by_id.find(images[i].image_id);
    if (it == by_id.end())
      throw ValidationError("route_oracle: labels missing image '" + images[i].image_id + "'");
    routes[i] = it->second == EasyHard::easy ? Route::basic : Route::partner;
  }
  return account(images, routes, run_basic, run_partner, cfg, timing);
}

std::vector<SweepRow> sweep_weights(
    const std::vector<double>& weights, const SweepData& data,
    const std::map<std::string, std::vector<Proposal>>& proposals,
    const DetectorRun& run_basic, const DetectorRun& run_partner,
    const std::vector<ImageRecord>& eval_images, const FeatureSpec& spec,
    const ApConfig& cfg, const TimingProfile& timing, const TrainConfig& base_cfg) {
  if (weights.empty()) throw ValidationError("sweep_weights: empty weight list");
  for (double w : weights)
    if (w <= 0.0) throw ValidationError("sweep_weights: weights must be positive");

  std::vector<SweepRow> rows(weights.size());
  parallel_for(weights.size(), [&](std::size_t i) {
    TrainConfig cfg_i = base_cfg;
    cfg_i.weight_hard = weights[i];
    const LinearModel model = train(data.train_features, data.train_labels, cfg_i);
    const ClassifierMetrics metrics =
        evaluate_classifier(model, data.eval_features, data.eval_labels);
    const RoutingResult routing =
        route(model, proposals, run_basic, run_partner, eval_images, spec, cfg, timing);
    rows[i] = {weights[i],          metrics.accuracy, metrics.recall_hard,
               routing.map_routed,  routing.mean_mapi_routed,
               routing.fps,         routing.sur,      routing.dmap};
  });
  return rows;
}

}  // namespace af
