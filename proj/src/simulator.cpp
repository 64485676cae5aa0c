#include "af/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "af/errors.hpp"
#include "af/parallel.hpp"
#include "af/rng.hpp"

namespace af {

namespace {

// Values pass through the serialized form (9 significant digits), so the
// generator snaps everything it emits; write-then-ingest is then lossless.
double snap9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

std::string image_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img%05d", index);
  return buf;
}

void validate(const SceneConfig& cfg) {
  if (cfg.n_images < 0) throw ValidationError("scene config: n_images < 0");
  if (cfg.width <= 0 || cfg.height <= 0)
    throw ValidationError("scene config: image extent must be positive");
  if (cfg.n_classes < 1) throw ValidationError("scene config: n_classes < 1");
  if (cfg.objects_min < 0 || cfg.objects_max < cfg.objects_min)
    throw ValidationError("scene config: bad objects-per-image range");
  if (cfg.small_object_fraction < 0.0 || cfg.small_object_fraction > 1.0)
    throw ValidationError("scene config: small_object_fraction outside [0,1]");
  auto check_range = [](double lo, double hi, const char* what) {
    if (!(lo > 0.0 && hi >= lo && hi <= 1.0))
      throw ValidationError(std::string("scene config: bad ") + what + " size range");
  };
  check_range(cfg.small_size_min, cfg.small_size_max, "small");
  check_range(cfg.large_size_min, cfg.large_size_max, "large");
}

void validate(const DetectorProfile& p) {
  for (double r : {p.recall_small, p.recall_medium, p.recall_large})
    if (r < 0.0 || r > 1.0)
      throw ValidationError("profile '" + p.detector_id + "': recall outside [0,1]");
  if (p.localization_noise < 0.0)
    throw ValidationError("profile '" + p.detector_id + "': negative noise");
  if (p.false_positive_rate < 0.0)
    throw ValidationError("profile '" + p.detector_id + "': negative fp rate");
  if (p.latency_ms <= 0.0)
    throw ValidationError("profile '" + p.detector_id + "': latency must be > 0");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

BBox random_box_at(Rng& rng, double cx, double cy, double w, double h,
                   double img_w, double img_h) {
  BBox b{cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
  return clamp_bbox(b, img_w, img_h);
}

}  // namespace

std::vector<ImageRecord> generate_scenes(const SceneConfig& cfg) {
  validate(cfg);
  std::vector<ImageRecord> scenes(cfg.n_images);
  const double min_dim = std::min(cfg.width, cfg.height);

  parallel_for(scenes.size(), [&](std::size_t i) {
    Rng rng = Rng::substream(cfg.seed, "scene", i);
    ImageRecord img;
    img.image_id = image_name(static_cast<int>(i));
    img.width = cfg.width;
    img.height = cfg.height;
    const int n_objects = rng.uniform_int(cfg.objects_min, cfg.objects_max);
    for (int o = 0; o < n_objects; ++o) {
      GtObject gt;
      gt.class_id = static_cast<int>(rng.uniform_index(cfg.n_classes));
      const bool small = rng.uniform() < cfg.small_object_fraction;
      const double side = min_dim * (small ? rng.uniform(cfg.small_size_min, cfg.small_size_max)
                                           : rng.uniform(cfg.large_size_min, cfg.large_size_max));
      const double aspect = rng.log_uniform(0.5, 2.0);
      const double w = std::min(side * std::sqrt(aspect), static_cast<double>(cfg.width));
      const double h = std::min(side / std::sqrt(aspect), static_cast<double>(cfg.height));
      const double cx = rng.uniform(w / 2.0, cfg.width - w / 2.0);
      const double cy = rng.uniform(h / 2.0, cfg.height - h / 2.0);
      BBox b = random_box_at(rng, cx, cy, w, h, cfg.width, cfg.height);
      gt.bbox = {snap9(b.xmin), snap9(b.ymin), snap9(b.xmax), snap9(b.ymax)};
      img.objects.push_back(gt);
    }
    scenes[i] = std::move(img);
  });
  return scenes;
}

SizeBuckets size_buckets(const std::vector<ImageRecord>& scenes) {
  SizeBuckets b;
  bool any = false;
  for (const auto& img : scenes) {
    for (const auto& gt : img.objects) {
      const double s = std::sqrt(gt.bbox.area());
      if (!any) {
        b.lo = b.hi = s;
        any = true;
      } else {
        b.lo = std::min(b.lo, s);
        b.hi = std::max(b.hi, s);
      }
    }
  }
  b.t1 = b.lo + (b.hi - b.lo) / 3.0;
  b.t2 = b.lo + 2.0 * (b.hi - b.lo) / 3.0;
  return b;
}

DetectorRun simulate_detector(const std::vector<ImageRecord>& scenes,
                              const DetectorProfile& profile, std::uint64_t seed) {
  validate(profile);
  const SizeBuckets buckets = size_buckets(scenes);
  const std::string tag = "detector:" + profile.detector_id;

  int n_classes = 1;  // class universe for false positives
  for (const auto& img : scenes)
    for (const auto& gt : img.objects) n_classes = std::max(n_classes, gt.class_id + 1);

  std::vector<std::vector<Detection>> per_image(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) {
    const ImageRecord& img = scenes[i];
    Rng rng = Rng::substream(seed, tag, i);
    std::vector<Detection>& dets = per_image[i];

    for (const auto& gt : img.objects) {
      const SizeBucket bucket = buckets.bucket_of(std::sqrt(gt.bbox.area()));
      if (rng.uniform() >= profile.recall_for(bucket)) continue;
      const double jx = profile.localization_noise * gt.bbox.width();
      const double jy = profile.localization_noise * gt.bbox.height();
      BBox b{gt.bbox.xmin + rng.normal(0.0, jx), gt.bbox.ymin + rng.normal(0.0, jy),
             gt.bbox.xmax + rng.normal(0.0, jx), gt.bbox.ymax + rng.normal(0.0, jy)};
      if (b.xmin > b.xmax) std::swap(b.xmin, b.xmax);
      if (b.ymin > b.ymax) std::swap(b.ymin, b.ymax);
      b = clamp_bbox(b, img.width, img.height);
      Detection d;
      d.class_id = gt.class_id;
      d.score = snap9(clamp01(rng.normal(profile.tp_score_mean, profile.tp_score_spread)));
      d.bbox = {snap9(b.xmin), snap9(b.ymin), snap9(b.xmax), snap9(b.ymax)};
      dets.push_back(d);
    }

    const int n_fp = rng.poisson(profile.false_positive_rate);
    const double min_dim = std::min(img.width, img.height);
    for (int f = 0; f < n_fp; ++f) {
      const double side = min_dim * rng.log_uniform(0.02, 0.5);
      const double aspect = rng.log_uniform(0.5, 2.0);
      const double w = std::min(side * std::sqrt(aspect), static_cast<double>(img.width));
      const double h = std::min(side / std::sqrt(aspect), static_cast<double>(img.height));
      const double cx = rng.uniform(w / 2.0, img.width - w / 2.0);
      const double cy = rng.uniform(h / 2.0, img.height - h / 2.0);
      const BBox b = random_box_at(rng, cx, cy, w, h, img.width, img.height);
      Detection d;
      d.class_id = static_cast<int>(rng.uniform_index(n_classes));
      d.score = snap9(clamp01(rng.normal(profile.fp_score_mean, profile.fp_score_spread)));
      d.bbox = {snap9(b.xmin), snap9(b.ymin), snap9(b.xmax), snap9(b.ymax)};
      dets.push_back(d);
    }
  });

  DetectorRun run;
  run.detector_id = profile.detector_id;
  run.nominal_fps = 1000.0 / profile.latency_ms;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    run.detections[scenes[i].image_id] = std::move(per_image[i]);
    run.latency_ms[scenes[i].image_id] = profile.latency_ms;
  }
  return run;
}

BenchmarkBundle paired_benchmark(const SceneConfig& scene_cfg,
                                 const DetectorProfile& fast,
                                 const DetectorProfile& accurate,
                                 const DetectorProfile& generator) {
  BenchmarkBundle bundle;
  bundle.images = generate_scenes(scene_cfg);
  bundle.buckets = size_buckets(bundle.images);
  bundle.run_basic = simulate_detector(bundle.images, fast, scene_cfg.seed);
  bundle.run_partner = simulate_detector(bundle.images, accurate, scene_cfg.seed);
  bundle.run_generator = simulate_detector(bundle.images, generator, scene_cfg.seed);
  bundle.rng_algorithm = Rng::kAlgorithm;
  return bundle;
}

std::vector<Proposal> proposals_from(const std::vector<Detection>& dets) {
  std::vector<Proposal> out;
  out.reserve(dets.size());
  for (const auto& d : dets) out.push_back({d.class_id, d.score, d.bbox, std::nullopt});
  return out;
}

}  // namespace af
