#include "af/labeling.hpp"

#include <limits>

#include "af/errors.hpp"
#include "af/parallel.hpp"

namespace af {

std::vector<EasyHardLabel> label_images(const DetectorRun& run_basic,
                                        const DetectorRun& run_partner,
                                        const std::vector<ImageRecord>& images,
                                        const ApConfig& cfg) {
  for (const auto& img : images) {
    if (!run_basic.covers(img.image_id))
      throw ValidationError("label_images: basic run missing image '" + img.image_id + "'");
    if (!run_partner.covers(img.image_id))
      throw ValidationError("label_images: partner run missing image '" + img.image_id + "'");
  }
  std::vector<EasyHardLabel> labels(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const ImageRecord& img = images[i];
    const double p1 = image_mapi(run_basic.detections.at(img.image_id), img, cfg).p_value;
    const double p2 = image_mapi(run_partner.detections.at(img.image_id), img, cfg).p_value;
    labels[i] = {img.image_id, p1, p2, p2 > p1 ? EasyHard::hard : EasyHard::easy};
  });
  return labels;
}

LabelStats label_stats(const std::vector<EasyHardLabel>& labels) {
  if (labels.empty()) throw ValidationError("label_stats: empty label list");
  LabelStats stats;
  for (const auto& label : labels)
    (label.label == EasyHard::hard ? stats.n_hard : stats.n_easy)++;
  const double n = static_cast<double>(labels.size());
  stats.easy_ratio = stats.n_easy / n;
  stats.hard_ratio = stats.n_hard / n;
  stats.balanced_weight = stats.n_hard > 0
                              ? static_cast<double>(stats.n_easy) / stats.n_hard
                              : std::numeric_limits<double>::infinity();
  return stats;
}

}  // namespace af
