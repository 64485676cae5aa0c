#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "af/features.hpp"
#include "af/types.hpp"

namespace af {

/// Synthetic scene generation: seeded, deterministic, with a knob for the
/// fraction of small objects (small objects are what separates a weak
/// detector from a strong one here).
struct SceneConfig {
  int n_images = 500;
  int width = 640;
  int height = 480;
  int n_classes = 6;
  int objects_min = 1;  // objects per image, uniform inclusive
  int objects_max = 6;
  double small_object_fraction = 0.35;
  double small_size_min = 0.03;  // object side as fraction of min(width,height)
  double small_size_max = 0.08;
  double large_size_min = 0.12;
  double large_size_max = 0.40;
  std::uint64_t seed = 1;
};

enum class SizeBucket { small, medium, large };

/// A stylized detector: per-size-bucket recall, localization jitter, a
/// Poisson false-positive rate, two-parameter score models, and a fixed
/// per-image latency.
struct DetectorProfile {
  std::string detector_id;
  double recall_small = 0.9;
  double recall_medium = 0.95;
  double recall_large = 0.98;
  double localization_noise = 0.05;  // stddev as fraction of box size
  double false_positive_rate = 0.5;  // expected FPs per image
  double tp_score_mean = 0.85;
  double tp_score_spread = 0.08;
  double fp_score_mean = 0.3;
  double fp_score_spread = 0.1;
  double latency_ms = 20.0;

  double recall_for(SizeBucket b) const {
    switch (b) {
      case SizeBucket::small: return recall_small;
      case SizeBucket::medium: return recall_medium;
      case SizeBucket::large: return recall_large;
    }
    return 0.0;
  }
};

/// Size buckets split the observed sqrt(area) range of the scene set into
/// thirds; the thresholds are recorded in the bundle header.
struct SizeBuckets {
  double lo = 0.0;  // min sqrt(area) over all ground truth
  double hi = 0.0;  // max
  double t1 = 0.0;  // lo + (hi-lo)/3
  double t2 = 0.0;  // lo + 2(hi-lo)/3

  SizeBucket bucket_of(double sqrt_area) const {
    if (sqrt_area < t1) return SizeBucket::small;
    if (sqrt_area < t2) return SizeBucket::medium;
    return SizeBucket::large;
  }
};

SizeBuckets size_buckets(const std::vector<ImageRecord>& scenes);

/// Everything the pipeline consumes, generated from one seed.
struct BenchmarkBundle {
  std::vector<ImageRecord> images;
  DetectorRun run_generator;  // doubles as the proposal source
  DetectorRun run_basic;
  DetectorRun run_partner;
  SizeBuckets buckets;
  std::string rng_algorithm;
};

/// Deterministic given cfg.seed; every box lies inside the image.
std::vector<ImageRecord> generate_scenes(const SceneConfig& cfg);

/// For each ground-truth object, emits a jittered detection with the
/// bucket's recall probability, plus Poisson false positives. The stream
/// is derived from (seed, detector_id, image index) so per-image
/// generation parallelizes without changing output.
DetectorRun simulate_detector(const std::vector<ImageRecord>& scenes,
                              const DetectorProfile& profile, std::uint64_t seed);

BenchmarkBundle paired_benchmark(const SceneConfig& scene_cfg,
                                 const DetectorProfile& fast,
                                 const DetectorProfile& accurate,
                                 const DetectorProfile& generator);

/// The generator run reinterpreted as instance proposals.
std::vector<Proposal> proposals_from(const std::vector<Detection>& dets);

}  // namespace af
