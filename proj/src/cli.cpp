#include "af/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "af/errors.hpp"
#include "af/io.hpp"
#include "af/router.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace af::cli {

namespace {

struct Overrides {
  std::optional<int> k;
  std::optional<std::string> spec;
  std::optional<std::uint64_t> seed;
  std::optional<double> iou;
  std::optional<std::string> interp;
};

FeatureSpec parse_spec_descriptor(const std::string& text, int n_classes) {
  FeatureSpec spec;
  spec.n_classes = n_classes;
  spec.class_encoding = ClassEncoding::none;
  spec.include_conf = false;
  spec.box_encoding = BoxEncoding::none;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, '+')) {
    if (token == "hist")
      spec.class_encoding = ClassEncoding::histogram;
    else if (token == "prob")
      spec.class_encoding = ClassEncoding::per_proposal_prob;
    else if (token == "none")
      spec.class_encoding = ClassEncoding::none;
    else if (token == "conf")
      spec.include_conf = true;
    else if (token == "4s")
      spec.box_encoding = BoxEncoding::size_4s;
    else if (token == "4c")
      spec.box_encoding = BoxEncoding::corners_4c;
    else
      throw ValidationError("--spec: unknown token '" + token +
                            "' (expected hist|prob|none, conf, 4s|4c)");
  }
  if (spec.class_encoding == ClassEncoding::none) spec.n_classes = 0;
  return spec;
}

Manifest load_with_overrides(const std::string& manifest_path, const Overrides& ov) {
  Manifest m = load_manifest(manifest_path);
  if (ov.spec) {
    m.spec = parse_spec_descriptor(*ov.spec, m.classes.size());
  }
  if (ov.k) {
    if (*ov.k < 1) throw ValidationError("--k must be >= 1");
    m.spec.k = *ov.k;
  }
  if (ov.iou) {
    if (*ov.iou <= 0.0 || *ov.iou > 1.0) throw ValidationError("--iou outside (0,1]");
    m.ap.iou_threshold = *ov.iou;
  }
  if (ov.interp) {
    if (*ov.interp == "11pt")
      m.ap.interpolation = Interpolation::eleven_point;
    else if (*ov.interp == "all")
      m.ap.interpolation = Interpolation::all_point;
    else
      throw ValidationError("--interp must be 11pt or all");
  }
  if (ov.seed) {
    m.sim.scene.seed = *ov.seed;
    m.train.seed = *ov.seed;
  }
  return m;
}

json metrics_json(const ClassifierMetrics& m) {
  return {{"accuracy", snap_real(m.accuracy)},
          {"recall_hard", snap_real(m.recall_hard)},
          {"recall_defined", m.recall_defined},
          {"tp", m.tp},
          {"fn", m.fn},
          {"fp", m.fp},
          {"tn", m.tn}};
}

json label_stats_json(const LabelStats& stats) {
  json j{{"n_easy", stats.n_easy},
         {"n_hard", stats.n_hard},
         {"easy_ratio", snap_real(stats.easy_ratio)},
         {"hard_ratio", snap_real(stats.hard_ratio)}};
  if (std::isinf(stats.balanced_weight))
    j["balanced_weight"] = nullptr;
  else
    j["balanced_weight"] = snap_real(stats.balanced_weight);
  return j;
}

json routing_json(const RoutingResult& r) {
  return {{"fraction_easy_predicted", snap_real(r.fraction_easy_predicted)},
          {"map_routed", snap_real(r.map_routed)},
          {"map_basic", snap_real(r.map_basic)},
          {"map_partner", snap_real(r.map_partner)},
          {"mean_mapi_routed", snap_real(r.mean_mapi_routed)},
          {"mean_mapi_basic", snap_real(r.mean_mapi_basic)},
          {"mean_mapi_partner", snap_real(r.mean_mapi_partner)},
          {"fps", snap_real(r.fps)},
          {"fps_partner", snap_real(r.fps_partner)},
          {"sur", snap_real(r.sur)},
          {"dmap", snap_real(r.dmap)},
          {"used_measured_latency", r.used_measured_latency}};
}

void write_json_atomic(const std::string& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "': " + e.what());
  }
  return j;
}

std::vector<ImageRecord> load_images(const Manifest& m) {
  return read_ground_truth(m.ground_truth_path, m.classes);
}

struct JoinedData {
  std::vector<FeatureVector> features;  // features-file order
  std::vector<EasyHard> labels;
  std::vector<std::string> image_ids;
};

JoinedData join_features_labels(const Manifest& m) {
  const auto rows = read_features(m.in_output_dir("features.jsonl"));
  const auto labels = read_labels(m.in_output_dir("labels.jsonl"));
  std::map<std::string, EasyHard> label_by_id;
  for (const auto& l : labels) label_by_id[l.image_id] = l.label;
  if (label_by_id.size() != labels.size())
    throw ValidationError("labels file has duplicate image ids");
  if (rows.size() != labels.size())
    throw ValidationError("features cover " + std::to_string(rows.size()) +
                          " images but labels cover " + std::to_string(labels.size()));
  JoinedData data;
  for (const auto& row : rows) {
    const auto it = label_by_id.find(row.image_id);
    if (it == label_by_id.end())
      throw ValidationError("no label for image '" + row.image_id + "'");
    data.features.push_back(row.feature);
    data.labels.push_back(it->second);
    data.image_ids.push_back(row.image_id);
  }
  return data;
}

double resolve_weight_hard(const Manifest& m, const std::vector<EasyHard>& train_labels) {
  if (!m.weight_hard_balanced) return m.train.weight_hard;
  long n_easy = 0, n_hard = 0;
  for (EasyHard l : train_labels) (l == EasyHard::hard ? n_hard : n_easy)++;
  if (n_hard == 0)
    throw ValidationError("balanced weight undefined: training split has no hard images");
  return static_cast<double>(n_easy) / static_cast<double>(n_hard);
}

// ---- commands ------------------------------------------------------------

int cmd_simulate(const Manifest& m) {
  const BenchmarkBundle bundle =
      paired_benchmark(m.sim.scene, m.sim.basic, m.sim.partner, m.sim.generator);
  write_ground_truth(m.ground_truth_path, bundle.images, m.classes);
  write_detections(m.run_basic_path, bundle.run_basic, bundle.images, m.classes);
  write_detections(m.run_partner_path, bundle.run_partner, bundle.images, m.classes);
  write_detections(m.proposals_path, bundle.run_generator, bundle.images, m.classes);

  json header;
  header["rng"] = bundle.rng_algorithm;
  header["seed"] = m.sim.scene.seed;
  header["scene"] = {{"n_images", m.sim.scene.n_images},
                     {"width", m.sim.scene.width},
                     {"height", m.sim.scene.height},
                     {"n_classes", m.sim.scene.n_classes},
                     {"objects_min", m.sim.scene.objects_min},
                     {"objects_max", m.sim.scene.objects_max},
                     {"small_object_fraction", snap_real(m.sim.scene.small_object_fraction)}};
  auto profile_json = [](const DetectorProfile& p) {
    return json{{"detector_id", p.detector_id},
                {"recall_small", snap_real(p.recall_small)},
                {"recall_medium", snap_real(p.recall_medium)},
                {"recall_large", snap_real(p.recall_large)},
                {"localization_noise", snap_real(p.localization_noise)},
                {"false_positive_rate", snap_real(p.false_positive_rate)},
                {"tp_score_mean", snap_real(p.tp_score_mean)},
                {"tp_score_spread", snap_real(p.tp_score_spread)},
                {"fp_score_mean", snap_real(p.fp_score_mean)},
                {"fp_score_spread", snap_real(p.fp_score_spread)},
                {"latency_ms", snap_real(p.latency_ms)}};
  };
  header["profiles"] = {{"generator", profile_json(m.sim.generator)},
                        {"basic", profile_json(m.sim.basic)},
                        {"partner", profile_json(m.sim.partner)}};
  // Size buckets: thirds of the observed sqrt(area) range.
  header["size_buckets"] = {{"sqrt_area_min", snap_real(bundle.buckets.lo)},
                            {"sqrt_area_max", snap_real(bundle.buckets.hi)},
                            {"threshold_small_medium", snap_real(bundle.buckets.t1)},
                            {"threshold_medium_large", snap_real(bundle.buckets.t2)}};
  write_json_atomic(m.in_output_dir("bundle_header.json"), header);

  long n_objects = 0;
  for (const auto& img : bundle.images) n_objects += static_cast<long>(img.objects.size());
  std::printf("simulate: %zu images, %ld objects, seed %llu\n", bundle.images.size(),
              n_objects, static_cast<unsigned long long>(m.sim.scene.seed));
  return 0;
}

int cmd_label(const Manifest& m) {
  const auto images = load_images(m);
  const auto run_basic = read_detections(m.run_basic_path, m.classes, "basic");
  const auto run_partner = read_detections(m.run_partner_path, m.classes, "partner");
  const auto labels = label_images(run_basic, run_partner, images, m.ap);
  const LabelStats stats = label_stats(labels);

  write_labels(m.in_output_dir("labels.jsonl"), labels);
  write_json_atomic(m.in_output_dir("label_stats.json"), label_stats_json(stats));
  std::printf("label: easy %.1f%% (%ld), hard %.1f%% (%ld), W = %.2f\n",
              100.0 * stats.easy_ratio, stats.n_easy, 100.0 * stats.hard_ratio,
              stats.n_hard, stats.balanced_weight);
  return 0;
}

int cmd_featurize(const Manifest& m) {
  const auto images = load_images(m);
  const auto proposals = read_proposals(m.proposals_path, m.classes);
  std::vector<FeatureRow> rows;
  rows.reserve(images.size());
  for (const auto& img : images) {
    const auto it = proposals.find(img.image_id);
    if (it == proposals.end())
      throw ValidationError("proposals missing image '" + img.image_id + "'");
    const auto top = select_top_k(it->second, m.spec.k);
    rows.push_back({img.image_id, encode(top, img, m.spec)});
  }
  write_features(m.in_output_dir("features.jsonl"), rows);
  std::printf("featurize: %zu images, spec %s (dim %d)\n", rows.size(),
              m.spec.describe().c_str(), m.spec.dimension());
  return 0;
}

int cmd_train(const Manifest& m) {
  const JoinedData data = join_features_labels(m);
  const SplitIndices split = train_eval_split(data.features.size(), m.split);
  if (split.train.empty()) throw ValidationError("train split is empty");

  std::vector<FeatureVector> train_x;
  std::vector<EasyHard> train_y;
  for (std::size_t i : split.train) {
    train_x.push_back(data.features[i]);
    train_y.push_back(data.labels[i]);
  }
  TrainConfig cfg = m.train;
  cfg.weight_hard = resolve_weight_hard(m, train_y);

  const LinearModel model = train(train_x, train_y, cfg);
  if (!model.meta.converged)
    throw ConvergenceError("solver did not reach tolerance " +
                           std::to_string(cfg.tolerance) + " within " +
                           std::to_string(cfg.max_epochs) + " epochs");

  const ClassifierMetrics train_metrics = evaluate_classifier(model, train_x, train_y);
  json metrics{{"weight_hard", snap_real(cfg.weight_hard)},
               {"n_train", static_cast<long>(split.train.size())},
               {"n_eval", static_cast<long>(split.eval.size())},
               {"epochs", model.meta.epochs},
               {"train", metrics_json(train_metrics)}};
  if (!split.eval.empty()) {
    std::vector<FeatureVector> eval_x;
    std::vector<EasyHard> eval_y;
    for (std::size_t i : split.eval) {
      eval_x.push_back(data.features[i]);
      eval_y.push_back(data.labels[i]);
    }
    metrics["eval"] = metrics_json(evaluate_classifier(model, eval_x, eval_y));
  }

  save_model(model, m.model_path);
  write_json_atomic(m.in_output_dir("metrics.json"), metrics);
  std::printf("train: %zu examples, weight_hard %.4g, %d epochs, train acc %.4f\n",
              train_x.size(), cfg.weight_hard, model.meta.epochs, train_metrics.accuracy);
  return 0;
}

int cmd_evaluate(const Manifest& m, const std::string& which) {
  const auto images = load_images(m);
  json report;
  auto eval_run = [&](const DetectorRun& run) {
    const DatasetEval de = dataset_map(run, images, m.ap);
    const double mapi = mean_mapi(run_mapi(run, images, m.ap));
    json per_class = json::array();
    for (const auto& c : de.per_class)
      per_class.push_back({{"class", m.classes.name_of(c.class_id)},
                           {"ap", snap_real(c.ap)},
                           {"n_gt", c.n_gt},
                           {"n_det", c.n_det}});
    std::printf("evaluate %s: mAP %.4f, mean mAPI %.4f\n", run.detector_id.c_str(),
                de.map, mapi);
    return json{{"map", snap_real(de.map)},
                {"mean_mapi", snap_real(mapi)},
                {"per_class", per_class}};
  };
  if (which == "basic" || which == "both")
    report["basic"] = eval_run(read_detections(m.run_basic_path, m.classes, "basic"));
  if (which == "partner" || which == "both")
    report["partner"] = eval_run(read_detections(m.run_partner_path, m.classes, "partner"));
  if (which != "basic" && which != "partner" && which != "both")
    report["custom"] = eval_run(read_detections(which, m.classes, "custom"));
  write_json_atomic(m.in_output_dir("eval_report.json"), report);
  return 0;
}

std::vector<ImageRecord> select_split(const std::vector<ImageRecord>& images,
                                      const SplitConfig& split_cfg, const std::string& split) {
  if (split == "all") return images;
  const SplitIndices split_idx = train_eval_split(images.size(), split_cfg);
  const auto& indices = split == "train" ? split_idx.train : split_idx.eval;
  std::vector<ImageRecord> out;
  for (std::size_t i : indices) out.push_back(images[i]);
  return out;
}

int cmd_route(const Manifest& m, const std::string& split) {
  const auto all_images = load_images(m);
  const auto images = select_split(all_images, m.split, split);
  if (images.empty()) throw ValidationError("route: selected split is empty");
  const auto run_basic = read_detections(m.run_basic_path, m.classes, "basic");
  const auto run_partner = read_detections(m.run_partner_path, m.classes, "partner");
  const auto proposals = read_proposals(m.proposals_path, m.classes);
  const LinearModel model = load_model(m.model_path);
  if (model.spec_hash != m.spec.hash())
    throw ValidationError("route: model was trained with spec " +
                          spec_hash_to_hex(model.spec_hash) + " but manifest spec is " +
                          spec_hash_to_hex(m.spec.hash()) + " (" + m.spec.describe() + ")");

  const RoutingResult result =
      route(model, proposals, run_basic, run_partner, images, m.spec, m.ap, m.timing);

  DetectorRun routed;
  routed.detector_id = "routed";
  routed.detections = result.routed_detections;
  write_detections(m.in_output_dir("routed.jsonl"), routed, images, m.classes);
  {
    std::ostringstream out;
    for (const auto& [id, r] : result.routes)
      out << "{\"image_id\":" << json(id).dump() << ",\"route\":"
          << (r == Route::basic ? "\"basic\"" : "\"partner\"") << "}\n";
    write_file_atomic(m.in_output_dir("routes.jsonl"), out.str());
  }
  json report = routing_json(result);
  report["split"] = split;
  report["n_images"] = static_cast<long>(images.size());
  write_json_atomic(m.in_output_dir("route_report.json"), report);

  std::printf("route: %zu images, easy %.1f%%, mAP %.4f (basic %.4f, partner %.4f), "
              "FPS %.1f, SUR %.0f%%, DmAP %.4f\n",
              images.size(), 100.0 * result.fraction_easy_predicted, result.map_routed,
              result.map_basic, result.map_partner, result.fps, 100.0 * result.sur,
              result.dmap);
  return 0;
}

int cmd_sweep(const Manifest& m, const std::string& weights_arg) {
  std::vector<double> weights;
  std::stringstream ss(weights_arg);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    char* end = nullptr;
    const double w = std::strtod(token.c_str(), &end);
    if (end == nullptr || *end != '\0' || w <= 0.0)
      throw ValidationError("--weights: bad entry '" + token + "'");
    weights.push_back(w);
  }
  if (weights.empty()) throw ValidationError("--weights: empty list");

  const auto all_images = load_images(m);
  const JoinedData data = join_features_labels(m);
  if (data.features.size() != all_images.size())
    throw ValidationError("features/labels do not cover the ground-truth image set");
  const SplitIndices split = train_eval_split(data.features.size(), m.split);
  if (split.train.empty() || split.eval.empty())
    throw ValidationError("sweep needs non-empty train and eval splits");

  SweepData sweep_data;
  for (std::size_t i : split.train) {
    sweep_data.train_features.push_back(data.features[i]);
    sweep_data.train_labels.push_back(data.labels[i]);
  }
  std::vector<ImageRecord> eval_images;
  for (std::size_t i : split.eval) {
    sweep_data.eval_features.push_back(data.features[i]);
    sweep_data.eval_labels.push_back(data.labels[i]);
    eval_images.push_back(all_images[i]);
  }

  const auto run_basic = read_detections(m.run_basic_path, m.classes, "basic");
  const auto run_partner = read_detections(m.run_partner_path, m.classes, "partner");
  const auto proposals = read_proposals(m.proposals_path, m.classes);

  const auto rows = sweep_weights(weights, sweep_data, proposals, run_basic, run_partner,
                                  eval_images, m.spec, m.ap, m.timing, m.train);

  std::ostringstream csv;
  csv << "weight,acc,recall,mAP,mean_mAPI,FPS,SUR,DmAP\n";
  json jrows = json::array();
  for (const auto& r : rows) {
    csv << format_real(r.weight) << "," << format_real(r.accuracy) << ","
        << format_real(r.recall_hard) << "," << format_real(r.map) << ","
        << format_real(r.mean_mapi) << "," << format_real(r.fps) << ","
        << format_real(r.sur) << "," << format_real(r.dmap) << "\n";
    jrows.push_back({{"weight", snap_real(r.weight)},
                     {"acc", snap_real(r.accuracy)},
                     {"recall", snap_real(r.recall_hard)},
                     {"map", snap_real(r.map)},
                     {"mean_mapi", snap_real(r.mean_mapi)},
                     {"fps", snap_real(r.fps)},
                     {"sur", snap_real(r.sur)},
                     {"dmap", snap_real(r.dmap)}});
  }
  write_file_atomic(m.in_output_dir("sweep.csv"), csv.str());
  write_json_atomic(m.in_output_dir("sweep.json"), jrows);
  std::printf("sweep: %zu weights over %zu train / %zu eval images\n", weights.size(),
              sweep_data.train_features.size(), sweep_data.eval_features.size());
  return 0;
}

int cmd_report(const Manifest& m) {
  json report;
  auto attach = [&](const char* key, const std::string& file) {
    const std::string path = m.in_output_dir(file);
    if (fs::exists(path))
      report[key] = read_json_file(path);
    else
      report[key] = nullptr;
  };
  attach("bundle", "bundle_header.json");
  attach("labels", "label_stats.json");
  attach("training", "metrics.json");
  attach("evaluation", "eval_report.json");
  attach("routing", "route_report.json");
  attach("sweep", "sweep.json");
  report["classes"] = m.classes.names;
  write_json_atomic(m.in_output_dir("report.json"), report);

  std::printf("report: written to %s\n", m.in_output_dir("report.json").c_str());
  if (!report["labels"].is_null())
    std::printf("  labels: easy %ld / hard %ld\n",
                report["labels"]["n_easy"].get<long>(),
                report["labels"]["n_hard"].get<long>());
  if (!report["routing"].is_null())
    std::printf("  routing: mAP %.4f, FPS %.1f, SUR %.0f%%, DmAP %.4f\n",
                report["routing"]["map_routed"].get<double>(),
                report["routing"]["fps"].get<double>(),
                100.0 * report["routing"]["sur"].get<double>(),
                report["routing"]["dmap"].get<double>());
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Adaptive detector cascade toolkit: easy/hard labeling, "
               "proposal features, weighted linear SVM, routing"};
  app.require_subcommand(1);

  std::string manifest_path;
  Overrides ov;
  std::string weights_arg = "1";
  std::string eval_which = "both";
  std::string route_split = "eval";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Manifest file")->required();
    cmd->add_option("--k", ov.k, "Override top-K proposal count");
    cmd->add_option("--spec", ov.spec, "Override feature spec, e.g. hist+conf+4s");
    cmd->add_option("--seed", ov.seed, "Override simulator/training seed");
    cmd->add_option("--iou", ov.iou, "Override IoU threshold");
    cmd->add_option("--interp", ov.interp, "Override AP interpolation: 11pt or all");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic benchmark bundle");
  CLI::App* label = app.add_subcommand("label", "Label images easy/hard from two runs");
  CLI::App* featurize = app.add_subcommand("featurize", "Encode proposal features");
  CLI::App* train_cmd = app.add_subcommand("train", "Train the easy/hard classifier");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Dataset mAP of detector runs");
  CLI::App* route_cmd = app.add_subcommand("route", "Run the cascade and its accounting");
  CLI::App* sweep = app.add_subcommand("sweep", "Train/route across sampling weights");
  CLI::App* report = app.add_subcommand("report", "Aggregate stage outputs into one report");
  for (CLI::App* cmd : {simulate, label, featurize, train_cmd, evaluate, route_cmd, sweep, report})
    add_common(cmd);
  evaluate->add_option("--run", eval_which, "basic, partner, both, or a detections file");
  route_cmd->add_option("--split", route_split, "eval, train, or all")
      ->check(CLI::IsMember({"eval", "train", "all"}));
  sweep->add_option("--weights", weights_arg, "Comma-separated hard-class weights");

  std::vector<const char*> argv;
  argv.push_back("af");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const Manifest m = load_with_overrides(manifest_path, ov);
    if (stage == "simulate") return cmd_simulate(m);
    if (stage == "label") return cmd_label(m);
    if (stage == "featurize") return cmd_featurize(m);
    if (stage == "train") return cmd_train(m);
    if (stage == "evaluate") return cmd_evaluate(m, eval_which);
    if (stage == "route") return cmd_route(m, route_split);
    if (stage == "sweep") return cmd_sweep(m, weights_arg);
    if (stage == "report") return cmd_report(m);
    std::fprintf(stderr, "af %s: unknown command\n", stage.c_str());
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "af %s: validation error: %s\n", stage.c_str(), e.what());
    return 2;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "af %s: convergence error: %s\n", stage.c_str(), e.what());
    return 4;
  } catch (const IoError& e) {
    std::fprintf(stderr, "af %s: io error: %s\n", stage.c_str(), e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "af %s: error: %s\n", stage.c_str(), e.what());
    return 3;
  }
}

}  // namespace af::cli
