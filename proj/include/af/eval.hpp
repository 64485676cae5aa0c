#pragma once

#include <string>
#include <vector>

#include "af/types.hpp"

namespace af {

enum class Interpolation { eleven_point, all_point };

struct ApConfig {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::eleven_point;
  bool ignore_difficult = true;
};

enum class MatchFlag { tp, fp, ignored };

/// Ranked tp/fp flags plus the cumulative precision/recall points built
/// from them. `ignored` detections (hits on difficult ground truth) are
/// excluded from the curve.
struct PrCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;  // paired with recall
  long tp = 0;
  long fp = 0;
  long n_positives = 0;
};

/// Per-image evaluation (the P value of the easy/hard rule).
struct ImageEvalResult {
  std::string image_id;
  double p_value = 0.0;  // mean AP over the classes present; 0 when none
  int s_classes = 0;     // number of classes with evaluable ground truth
  std::vector<std::pair<int, double>> class_aps;  // (class_id, AP)
};

struct ClassAp {
  int class_id = 0;
  double ap = 0.0;
  long n_gt = 0;   // evaluable ground-truth instances dataset-wide
  long n_det = 0;  // detections considered
};

struct DatasetEval {
  double map = 0.0;
  std::vector<ClassAp> per_class;  // classes with n_gt >= 1 only
};

/// Deterministic ranking order: score descending, then bbox xmin, ymin
/// and class_id ascending. stable_sort on top of a deterministic input
/// order makes evaluation bit-reproducible.
bool detection_rank_less(const Detection& a, const Detection& b);

/// Greedy VOC-style matching for one class. Detections are ranked by
/// detection_rank_less; each is matched to the unmatched ground truth with
/// highest IoU >= cfg.iou_threshold. Duplicate hits are false positives;
/// hits whose best match is a difficult object are ignored (not counted
/// either way) when cfg.ignore_difficult. Flags are returned in the same
/// order as `dets`.
std::vector<MatchFlag> match_detections(const std::vector<Detection>& dets,
                                        const std::vector<GtObject>& gts,
                                        const ApConfig& cfg);

/// Builds the cumulative precision/recall curve from ranked flags.
/// n_positives counts evaluable ground truth (difficult excluded when
/// cfg.ignore_difficult).
PrCurve build_pr_curve(const std::vector<Detection>& dets,
                       const std::vector<GtObject>& gts, const ApConfig& cfg);

/// Interpolated average precision of a curve. Requires n_positives >= 1;
/// callers decide what an undefined AP (no positives) means for them.
double average_precision(const PrCurve& curve, const ApConfig& cfg);

/// Dataset mAP: per-class AP over detections pooled across all images,
/// averaged over the classes with at least one evaluable ground-truth
/// instance. Throws ValidationError when no class has any.
DatasetEval dataset_map(const DetectorRun& run,
                        const std::vector<ImageRecord>& images,
                        const ApConfig& cfg);

/// Per-image mean average precision over the classes present in this
/// image's ground truth. Detections of absent classes are ignored; an
/// image with no evaluable ground truth gets P = 0 with S = 0.
ImageEvalResult image_mapi(const std::vector<Detection>& dets,
                           const ImageRecord& image, const ApConfig& cfg);

/// image_mapi for every image of a run, in `images` order. Missing
/// coverage raises ValidationError naming the image.
std::vector<ImageEvalResult> run_mapi(const DetectorRun& run,
                                      const std::vector<ImageRecord>& images,
                                      const ApConfig& cfg);

double mean_mapi(const std::vector<ImageEvalResult>& results);

}  // namespace af
