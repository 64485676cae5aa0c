#include "af/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "af/errors.hpp"
#include "af/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace af {

int ClassMap::id_of(const std::string& name, const std::string& context) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw ValidationError(context + ": unknown class '" + name + "'");
}

const std::string& ClassMap::name_of(int id) const {
  if (id < 0 || id >= size())
    throw ValidationError("class id " + std::to_string(id) + " outside the class list");
  return names[static_cast<std::size_t>(id)];
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double snap_real(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

namespace {

std::string loc(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

/// Calls fn(parsed json, line number) for every non-empty line.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(loc(path, line_no) + ": " + e.what());
    }
    fn(j, line_no);
    ++records;
  }
  if (records == 0)
    std::fprintf(stderr, "warning: %s contains no records\n", path.c_str());
}

BBox parse_bbox(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw ValidationError(where + ": bbox must be [xmin,ymin,xmax,ymax]");
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw ValidationError(where + ": bbox has xmax < xmin or ymax < ymin");
  return b;
}

std::string bbox_json(const BBox& b) {
  return "[" + format_real(b.xmin) + "," + format_real(b.ymin) + "," +
         format_real(b.xmax) + "," + format_real(b.ymax) + "]";
}

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

std::string spec_hash_to_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t spec_hash_from_hex(const std::string& s, const std::string& context) {
  if (s.empty()) throw ValidationError(context + ": empty spec hash");
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(s.c_str(), &end, 16);
  if (end == nullptr || *end != '\0')
    throw ValidationError(context + ": bad spec hash '" + s + "'");
  return v;
}

std::vector<ImageRecord> read_ground_truth(const std::string& path, const ClassMap& classes) {
  std::vector<ImageRecord> images;
  std::set<std::string> seen;
  for_each_line(path, [&](const json& j, std::size_t line_no) {
    const std::string where = loc(path, line_no);
    ImageRecord img;
    try {
      img.image_id = j.at("image_id").get<std::string>();
      img.width = j.at("width").get<int>();
      img.height = j.at("height").get<int>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (img.image_id.empty()) throw ValidationError(where + ": empty image_id");
    if (!seen.insert(img.image_id).second)
      throw ValidationError(where + ": duplicate image_id '" + img.image_id + "'");
    if (img.width <= 0 || img.height <= 0)
      throw ValidationError(where + ": width and height must be positive");
    if (j.contains("objects")) {
      for (const auto& obj : j.at("objects")) {
        GtObject gt;
        try {
          gt.class_id = classes.id_of(obj.at("class").get<std::string>(), where);
          gt.bbox = parse_bbox(obj.at("bbox"), where);
          gt.difficult = obj.value("difficult", false);
        } catch (const json::exception& e) {
          throw ValidationError(where + ": " + e.what());
        }
        if (gt.bbox.xmin < 0 || gt.bbox.ymin < 0 || gt.bbox.xmax > img.width ||
            gt.bbox.ymax > img.height)
          throw ValidationError(where + ": object bbox outside the image extent");
        img.objects.push_back(gt);
      }
    }
    images.push_back(std::move(img));
  });
  return images;
}

namespace {

Detection parse_item(const json& item, const ClassMap& classes, const std::string& where) {
  Detection d;
  try {
    d.class_id = classes.id_of(item.at("class").get<std::string>(), where);
    d.score = item.at("score").get<double>();
    d.bbox = parse_bbox(item.at("bbox"), where);
  } catch (const json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (d.score < 0.0 || d.score > 1.0)
    throw ValidationError(where + ": score outside [0,1]");
  return d;
}

}  // namespace

DetectorRun read_detections(const std::string& path, const ClassMap& classes,
                            const std::string& detector_id) {
  DetectorRun run;
  run.detector_id = detector_id;
  for_each_line(path, [&](const json& j, std::size_t line_no) {
    const std::string where = loc(path, line_no);
    std::string image_id;
    try {
      image_id = j.at("image_id").get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (run.detections.count(image_id))
      throw ValidationError(where + ": duplicate image_id '" + image_id + "'");
    std::vector<Detection>& dets = run.detections[image_id];
    if (j.contains("items"))
      for (const auto& item : j.at("items")) dets.push_back(parse_item(item, classes, where));
    if (j.contains("latency_ms")) {
      const double latency = j.at("latency_ms").get<double>();
      if (latency <= 0.0) throw ValidationError(where + ": latency_ms must be > 0");
      run.latency_ms[image_id] = latency;
    }
  });
  return run;
}

std::map<std::string, std::vector<Proposal>> read_proposals(const std::string& path,
                                                            const ClassMap& classes) {
  std::map<std::string, std::vector<Proposal>> out;
  for_each_line(path, [&](const json& j, std::size_t line_no) {
    const std::string where = loc(path, line_no);
    std::string image_id;
    try {
      image_id = j.at("image_id").get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (out.count(image_id))
      throw ValidationError(where + ": duplicate image_id '" + image_id + "'");
    std::vector<Proposal>& props = out[image_id];
    if (j.contains("items")) {
      for (const auto& item : j.at("items")) {
        const Detection d = parse_item(item, classes, where);
        Proposal p{d.class_id, d.score, d.bbox, std::nullopt};
        if (item.contains("probs")) {
          try {
            p.probs = item.at("probs").get<std::vector<double>>();
          } catch (const json::exception& e) {
            throw ValidationError(where + ": " + e.what());
          }
          if (static_cast<int>(p.probs->size()) != classes.size())
            throw ValidationError(where + ": probs length " +
                                  std::to_string(p.probs->size()) + ", expected " +
                                  std::to_string(classes.size()));
        }
        props.push_back(std::move(p));
      }
    }
  });
  return out;
}

std::vector<EasyHardLabel> read_labels(const std::string& path) {
  std::vector<EasyHardLabel> labels;
  for_each_line(path, [&](const json& j, std::size_t line_no) {
    const std::string where = loc(path, line_no);
    EasyHardLabel l;
    std::string tag;
    try {
      l.image_id = j.at("image_id").get<std::string>();
      l.p1 = j.at("p1").get<double>();
      l.p2 = j.at("p2").get<double>();
      tag = j.at("label").get<std::string>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (l.p1 < 0.0 || l.p1 > 1.0 || l.p2 < 0.0 || l.p2 > 1.0)
      throw ValidationError(where + ": p1/p2 outside [0,1]");
    if (tag == "easy")
      l.label = EasyHard::easy;
    else if (tag == "hard")
      l.label = EasyHard::hard;
    else
      throw ValidationError(where + ": label must be 'easy' or 'hard'");
    labels.push_back(std::move(l));
  });
  return labels;
}

std::vector<FeatureRow> read_features(const std::string& path) {
  std::vector<FeatureRow> rows;
  for_each_line(path, [&](const json& j, std::size_t line_no) {
    const std::string where = loc(path, line_no);
    FeatureRow row;
    try {
      row.image_id = j.at("image_id").get<std::string>();
      row.feature.spec_hash = spec_hash_from_hex(j.at("spec_hash").get<std::string>(), where);
      row.feature.values = j.at("values").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!rows.empty() && rows.front().feature.spec_hash != row.feature.spec_hash)
      throw ValidationError(where + ": mixed spec hashes in one feature file");
    rows.push_back(std::move(row));
  });
  return rows;
}

void write_ground_truth(const std::string& path, const std::vector<ImageRecord>& images,
                        const ClassMap& classes) {
  std::ostringstream out;
  for (const auto& img : images) {
    out << "{\"image_id\":" << quoted(img.image_id) << ",\"width\":" << img.width
        << ",\"height\":" << img.height << ",\"objects\":[";
    for (std::size_t i = 0; i < img.objects.size(); ++i) {
      const GtObject& gt = img.objects[i];
      if (i) out << ",";
      out << "{\"class\":" << quoted(classes.name_of(gt.class_id))
          << ",\"bbox\":" << bbox_json(gt.bbox);
      if (gt.difficult) out << ",\"difficult\":true";
      out << "}";
    }
    out << "]}\n";
  }
  write_file_atomic(path, out.str());
}

void write_detections(const std::string& path, const DetectorRun& run,
                      const std::vector<ImageRecord>& images, const ClassMap& classes) {
  std::ostringstream out;
  for (const auto& img : images) {
    const auto it = run.detections.find(img.image_id);
    if (it == run.detections.end())
      throw ValidationError("write_detections: run '" + run.detector_id +
                            "' missing image '" + img.image_id + "'");
    out << "{\"image_id\":" << quoted(img.image_id) << ",\"items\":[";
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const Detection& d = it->second[i];
      if (i) out << ",";
      out << "{\"class\":" << quoted(classes.name_of(d.class_id))
          << ",\"score\":" << format_real(d.score) << ",\"bbox\":" << bbox_json(d.bbox)
          << "}";
    }
    out << "]";
    const auto lat = run.latency_ms.find(img.image_id);
    if (lat != run.latency_ms.end()) out << ",\"latency_ms\":" << format_real(lat->second);
    out << "}\n";
  }
  write_file_atomic(path, out.str());
}

void write_labels(const std::string& path, const std::vector<EasyHardLabel>& labels) {
  std::ostringstream out;
  for (const auto& l : labels) {
    out << "{\"image_id\":" << quoted(l.image_id) << ",\"p1\":" << format_real(l.p1)
        << ",\"p2\":" << format_real(l.p2) << ",\"label\":"
        << (l.label == EasyHard::hard ? "\"hard\"" : "\"easy\"") << "}\n";
  }
  write_file_atomic(path, out.str());
}

void write_features(const std::string& path, const std::vector<FeatureRow>& rows) {
  std::ostringstream out;
  for (const auto& row : rows) {
    out << "{\"image_id\":" << quoted(row.image_id) << ",\"spec_hash\":\""
        << spec_hash_to_hex(row.feature.spec_hash) << "\",\"values\":[";
    for (std::size_t i = 0; i < row.feature.values.size(); ++i) {
      if (i) out << ",";
      out << format_real(row.feature.values[i]);
    }
    out << "]}\n";
  }
  write_file_atomic(path, out.str());
}

SplitIndices train_eval_split(std::size_t n, const SplitConfig& cfg) {
  if (cfg.train_fraction < 0.0 || cfg.train_fraction > 1.0)
    throw ValidationError("split: train_fraction outside [0,1]");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::substream(cfg.seed, "train-eval-split", 0);
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(order[i], order[j]);
  }
  const std::size_t n_train =
      static_cast<std::size_t>(std::ceil(cfg.train_fraction * static_cast<double>(n)));
  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + std::min(n_train, n));
  split.eval.assign(order.begin() + std::min(n_train, n), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

std::string Manifest::in_output_dir(const std::string& name) const {
  return (fs::path(output_dir) / name).string();
}

namespace {

std::string resolve(const std::string& dir, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(dir) / p).string();
}

void parse_ap(const json& j, ApConfig& ap) {
  ap.iou_threshold = j.value("iou_threshold", ap.iou_threshold);
  if (ap.iou_threshold <= 0.0 || ap.iou_threshold > 1.0)
    throw ValidationError("manifest: iou_threshold outside (0,1]");
  if (j.contains("interpolation")) {
    const std::string v = j.at("interpolation").get<std::string>();
    if (v == "11pt")
      ap.interpolation = Interpolation::eleven_point;
    else if (v == "all")
      ap.interpolation = Interpolation::all_point;
    else
      throw ValidationError("manifest: interpolation must be '11pt' or 'all'");
  }
  ap.ignore_difficult = j.value("ignore_difficult", ap.ignore_difficult);
}

void parse_feature_spec(const json& j, FeatureSpec& spec) {
  spec.k = j.value("k", spec.k);
  if (spec.k < 1) throw ValidationError("manifest: feature k must be >= 1");
  if (j.contains("class_encoding")) {
    const std::string v = j.at("class_encoding").get<std::string>();
    if (v == "histogram")
      spec.class_encoding = ClassEncoding::histogram;
    else if (v == "per_proposal_prob")
      spec.class_encoding = ClassEncoding::per_proposal_prob;
    else if (v == "none")
      spec.class_encoding = ClassEncoding::none;
    else
      throw ValidationError("manifest: unknown class_encoding '" + v + "'");
  }
  spec.include_conf = j.value("include_conf", spec.include_conf);
  if (j.contains("box_encoding")) {
    const std::string v = j.at("box_encoding").get<std::string>();
    if (v == "4c")
      spec.box_encoding = BoxEncoding::corners_4c;
    else if (v == "4s")
      spec.box_encoding = BoxEncoding::size_4s;
    else if (v == "none")
      spec.box_encoding = BoxEncoding::none;
    else
      throw ValidationError("manifest: unknown box_encoding '" + v + "'");
  }
}

void parse_profile(const json& j, DetectorProfile& p, const std::string& fallback_id) {
  p.detector_id = j.value("detector_id", fallback_id);
  p.recall_small = j.value("recall_small", p.recall_small);
  p.recall_medium = j.value("recall_medium", p.recall_medium);
  p.recall_large = j.value("recall_large", p.recall_large);
  p.localization_noise = j.value("localization_noise", p.localization_noise);
  p.false_positive_rate = j.value("false_positive_rate", p.false_positive_rate);
  p.tp_score_mean = j.value("tp_score_mean", p.tp_score_mean);
  p.tp_score_spread = j.value("tp_score_spread", p.tp_score_spread);
  p.fp_score_mean = j.value("fp_score_mean", p.fp_score_mean);
  p.fp_score_spread = j.value("fp_score_spread", p.fp_score_spread);
  p.latency_ms = j.value("latency_ms", p.latency_ms);
}

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("manifest '" + path + "': " + e.what());
  }

  Manifest m;
  m.dir = fs::path(path).has_parent_path() ? fs::path(path).parent_path().string() : ".";

  try {
    m.classes.names = j.at("classes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ValidationError("manifest '" + path + "': " + e.what());
  }
  if (m.classes.names.empty()) throw ValidationError("manifest: empty class list");
  {
    std::set<std::string> unique(m.classes.names.begin(), m.classes.names.end());
    if (unique.size() != m.classes.names.size())
      throw ValidationError("manifest: duplicate class names");
  }

  const json paths = j.value("paths", json::object());
  m.ground_truth_path = resolve(m.dir, paths.value("ground_truth", "gt.jsonl"));
  m.run_basic_path = resolve(m.dir, paths.value("run_basic", "run_basic.jsonl"));
  m.run_partner_path = resolve(m.dir, paths.value("run_partner", "run_partner.jsonl"));
  m.proposals_path = resolve(m.dir, paths.value("proposals", "proposals.jsonl"));
  m.output_dir = resolve(m.dir, paths.value("output_dir", "out"));
  m.model_path = paths.contains("model") ? resolve(m.dir, paths.at("model").get<std::string>())
                                         : m.in_output_dir("model.json");

  m.spec.n_classes = m.classes.size();
  if (j.contains("ap")) parse_ap(j.at("ap"), m.ap);
  if (j.contains("feature_spec")) parse_feature_spec(j.at("feature_spec"), m.spec);

  if (j.contains("train")) {
    const json& t = j.at("train");
    m.train.c = t.value("c", m.train.c);
    m.train.tolerance = t.value("tolerance", m.train.tolerance);
    m.train.max_epochs = t.value("max_epochs", m.train.max_epochs);
    m.train.seed = t.value("seed", m.train.seed);
    if (t.contains("weight_hard")) {
      if (t.at("weight_hard").is_string()) {
        if (t.at("weight_hard").get<std::string>() != "balanced")
          throw ValidationError("manifest: weight_hard must be a number or 'balanced'");
        m.weight_hard_balanced = true;
      } else {
        m.train.weight_hard = t.at("weight_hard").get<double>();
        if (m.train.weight_hard <= 0.0)
          throw ValidationError("manifest: weight_hard must be positive");
        m.weight_hard_balanced = false;
      }
    }
  }

  if (j.contains("split")) {
    m.split.train_fraction = j.at("split").value("train_fraction", m.split.train_fraction);
    m.split.seed = j.at("split").value("seed", m.split.seed);
  }

  if (j.contains("timing")) {
    const json& t = j.at("timing");
    m.timing.t_generator_ms = t.value("t_generator_ms", m.timing.t_generator_ms);
    m.timing.t_classifier_ms = t.value("t_classifier_ms", m.timing.t_classifier_ms);
    m.timing.t_basic_ms = t.value("t_basic_ms", m.timing.t_basic_ms);
    m.timing.t_partner_ms = t.value("t_partner_ms", m.timing.t_partner_ms);
    for (double v : {m.timing.t_generator_ms, m.timing.t_classifier_ms, m.timing.t_basic_ms,
                     m.timing.t_partner_ms})
      if (v <= 0.0) throw ValidationError("manifest: timing entries must be > 0");
  }

  m.sim.generator.detector_id = "generator";
  m.sim.basic.detector_id = "basic";
  m.sim.partner.detector_id = "partner";
  if (j.contains("simulator")) {
    const json& s = j.at("simulator");
    if (s.contains("scene")) {
      const json& sc = s.at("scene");
      m.sim.scene.n_images = sc.value("n_images", m.sim.scene.n_images);
      m.sim.scene.width = sc.value("width", m.sim.scene.width);
      m.sim.scene.height = sc.value("height", m.sim.scene.height);
      m.sim.scene.objects_min = sc.value("objects_min", m.sim.scene.objects_min);
      m.sim.scene.objects_max = sc.value("objects_max", m.sim.scene.objects_max);
      m.sim.scene.small_object_fraction =
          sc.value("small_object_fraction", m.sim.scene.small_object_fraction);
      m.sim.scene.small_size_min = sc.value("small_size_min", m.sim.scene.small_size_min);
      m.sim.scene.small_size_max = sc.value("small_size_max", m.sim.scene.small_size_max);
      m.sim.scene.large_size_min = sc.value("large_size_min", m.sim.scene.large_size_min);
      m.sim.scene.large_size_max = sc.value("large_size_max", m.sim.scene.large_size_max);
      m.sim.scene.seed = sc.value("seed", m.sim.scene.seed);
    }
    m.sim.scene.n_classes = m.classes.size();
    const json profiles = s.value("profiles", json::object());
    if (profiles.contains("generator"))
      parse_profile(profiles.at("generator"), m.sim.generator, "generator");
    if (profiles.contains("basic")) parse_profile(profiles.at("basic"), m.sim.basic, "basic");
    if (profiles.contains("partner"))
      parse_profile(profiles.at("partner"), m.sim.partner, "partner");
  }
  m.sim.scene.n_classes = m.classes.size();

  return m;
}

}  // namespace af
