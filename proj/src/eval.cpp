#include "af/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "af/errors.hpp"
#include "af/parallel.hpp"

namespace af {

bool detection_rank_less(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.bbox.xmin != b.bbox.xmin) return a.bbox.xmin < b.bbox.xmin;
  if (a.bbox.ymin != b.bbox.ymin) return a.bbox.ymin < b.bbox.ymin;
  return a.class_id < b.class_id;
}

std::vector<MatchFlag> match_detections(const std::vector<Detection>& dets,
                                        const std::vector<GtObject>& gts,
                                        const ApConfig& cfg) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detection_rank_less(dets[a], dets[b]);
  });

  std::vector<bool> gt_matched(gts.size(), false);
  std::vector<MatchFlag> flags(dets.size(), MatchFlag::fp);

  for (std::size_t rank : order) {
    const Detection& det = dets[rank];
    double best_iou = 0.0;
    std::ptrdiff_t best = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_matched[g]) continue;
      const double v = iou(det.bbox, gts[g].bbox);
      if (v >= cfg.iou_threshold && v > best_iou) {
        best_iou = v;
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best < 0) {
      flags[rank] = MatchFlag::fp;  // no unmatched gt above threshold
    } else if (gts[best].difficult && cfg.ignore_difficult) {
      // Difficult objects absorb hits without counting; they stay
      // unmatched so further overlapping detections are ignored too.
      flags[rank] = MatchFlag::ignored;
    } else {
      flags[rank] = MatchFlag::tp;
      gt_matched[best] = true;
    }
  }
  return flags;
}

namespace {

long count_positives(const std::vector<GtObject>& gts, const ApConfig& cfg) {
  long n = 0;
  for (const auto& gt : gts)
    if (!(gt.difficult && cfg.ignore_difficult)) ++n;
  return n;
}

PrCurve curve_from_ranked_flags(const std::vector<MatchFlag>& ranked_flags,
                                long n_positives) {
  PrCurve curve;
  curve.n_positives = n_positives;
  long tp = 0, fp = 0;
  for (MatchFlag f : ranked_flags) {
    if (f == MatchFlag::ignored) continue;
    if (f == MatchFlag::tp)
      ++tp;
    else
      ++fp;
    curve.recall.push_back(n_positives > 0 ? static_cast<double>(tp) / n_positives : 0.0);
    curve.precision.push_back(static_cast<double>(tp) / (tp + fp));
  }
  curve.tp = tp;
  curve.fp = fp;
  return curve;
}

}  // namespace

PrCurve build_pr_curve(const std::vector<Detection>& dets,
                       const std::vector<GtObject>& gts, const ApConfig& cfg) {
  const std::vector<MatchFlag> flags = match_detections(dets, gts, cfg);
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detection_rank_less(dets[a], dets[b]);
  });
  std::vector<MatchFlag> ranked;
  ranked.reserve(flags.size());
  for (std::size_t i : order) ranked.push_back(flags[i]);
  return curve_from_ranked_flags(ranked, count_positives(gts, cfg));
}

double average_precision(const PrCurve& curve, const ApConfig& cfg) {
  if (curve.n_positives < 1)
    throw ValidationError("average_precision: undefined with no positive instances");
  const std::size_t n = curve.recall.size();
  if (cfg.interpolation == Interpolation::eleven_point) {
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double r = step / 10.0;
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (curve.recall[i] >= r) p = std::max(p, curve.precision[i]);
      sum += p;
    }
    return sum / 11.0;
  }
  // All-point: area under the monotone precision envelope.
  std::vector<double> env(curve.precision);
  for (std::size_t i = n; i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (curve.recall[i] - prev_recall) * env[i];
    prev_recall = curve.recall[i];
  }
  return ap;
}

namespace {

struct PooledDetection {
  Detection det;
  MatchFlag flag;
};

}  // namespace

DatasetEval dataset_map(const DetectorRun& run,
                        const std::vector<ImageRecord>& images,
                        const ApConfig& cfg) {
  // Class universe = classes with at least one evaluable gt instance.
  std::map<int, long> gt_counts;
  for (const auto& img : images)
    for (const auto& gt : img.objects)
      if (!(gt.difficult && cfg.ignore_difficult)) ++gt_counts[gt.class_id];
  if (gt_counts.empty())
    throw ValidationError("dataset_map: no evaluable ground-truth instances");

  for (const auto& img : images)
    if (!run.covers(img.image_id))
      throw ValidationError("dataset_map: run '" + run.detector_id +
                            "' does not cover image '" + img.image_id + "'");

  std::vector<int> classes;
  for (const auto& [cls, n] : gt_counts) classes.push_back(cls);

  DatasetEval out;
  out.per_class.resize(classes.size());

  parallel_for(classes.size(), [&](std::size_t ci) {
    const int cls = classes[ci];
    // Match per image (greedy matching is local to an image), then pool
    // the flagged detections into one dataset-wide ranked list.
    std::vector<PooledDetection> pooled;
    for (const auto& img : images) {
      const auto& image_dets = run.detections.at(img.image_id);
      std::vector<Detection> dets;
      for (const auto& d : image_dets)
        if (d.class_id == cls) dets.push_back(d);
      std::vector<GtObject> gts;
      for (const auto& gt : img.objects)
        if (gt.class_id == cls) gts.push_back(gt);
      const auto flags = match_detections(dets, gts, cfg);
      for (std::size_t i = 0; i < dets.size(); ++i)
        pooled.push_back({dets[i], flags[i]});
    }
    std::stable_sort(pooled.begin(), pooled.end(),
                     [](const PooledDetection& a, const PooledDetection& b) {
                       return detection_rank_less(a.det, b.det);
                     });
    std::vector<MatchFlag> ranked;
    ranked.reserve(pooled.size());
    for (const auto& p : pooled) ranked.push_back(p.flag);
    PrCurve curve = curve_from_ranked_flags(ranked, gt_counts.at(cls));

    ClassAp& entry = out.per_class[ci];
    entry.class_id = cls;
    entry.n_gt = curve.n_positives;
    entry.n_det = static_cast<long>(pooled.size());
    entry.ap = average_precision(curve, cfg);
  });

  double sum = 0.0;
  for (const auto& entry : out.per_class) sum += entry.ap;
  out.map = sum / static_cast<double>(out.per_class.size());
  return out;
}

ImageEvalResult image_mapi(const std::vector<Detection>& dets,
                           const ImageRecord& image, const ApConfig& cfg) {
  ImageEvalResult result;
  result.image_id = image.image_id;

  std::map<int, long> present;  // class -> evaluable gt count in this image
  for (const auto& gt : image.objects)
    if (!(gt.difficult && cfg.ignore_difficult)) ++present[gt.class_id];

  if (present.empty()) return result;  // S = 0 => P = 0

  double sum = 0.0;
  for (const auto& [cls, n_gt] : present) {
    std::vector<Detection> class_dets;
    for (const auto& d : dets)
      if (d.class_id == cls) class_dets.push_back(d);
    std::vector<GtObject> class_gts;
    for (const auto& gt : image.objects)
      if (gt.class_id == cls) class_gts.push_back(gt);
    const double ap = average_precision(build_pr_curve(class_dets, class_gts, cfg), cfg);
    result.class_aps.emplace_back(cls, ap);
    sum += ap;
  }
  result.s_classes = static_cast<int>(result.class_aps.size());
  result.p_value = sum / result.s_classes;
  return result;
}

std::vector<ImageEvalResult> run_mapi(const DetectorRun& run,
                                      const std::vector<ImageRecord>& images,
                                      const ApConfig& cfg) {
  std::vector<ImageEvalResult> results(images.size());
  for (const auto& img : images)
    if (!run.covers(img.image_id))
      throw ValidationError("run '" + run.detector_id + "' does not cover image '" +
                            img.image_id + "'");
  parallel_for(images.size(), [&](std::size_t i) {
    results[i] = image_mapi(run.detections.at(images[i].image_id), images[i], cfg);
  });
  return results;
}

double mean_mapi(const std::vector<ImageEvalResult>& results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : results) sum += r.p_value;
  return sum / static_cast<double>(results.size());
}

}  // namespace af
