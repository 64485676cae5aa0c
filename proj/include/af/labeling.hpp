#pragma once

#include <string>
#include <vector>

#include "af/eval.hpp"

namespace af {

/// Hard is the positive class (+1): the partner model strictly beats the
/// basic one on that image. Ties go to easy.
enum class EasyHard : int { easy = -1, hard = +1 };

struct EasyHardLabel {
  std::string image_id;
  double p1 = 0.0;  // basic-model mAPI
  double p2 = 0.0;  // partner-model mAPI
  EasyHard label = EasyHard::easy;
};

struct LabelStats {
  long n_easy = 0;
  long n_hard = 0;
  double easy_ratio = 0.0;
  double hard_ratio = 0.0;
  double balanced_weight = 0.0;  // n_easy / n_hard; +inf when n_hard == 0
};

/// One label per image: hard iff the partner mAPI strictly exceeds the
/// basic mAPI. Both runs must cover every image.
std::vector<EasyHardLabel> label_images(const DetectorRun& run_basic,
                                        const DetectorRun& run_partner,
                                        const std::vector<ImageRecord>& images,
                                        const ApConfig& cfg);

/// Counts and ratios; throws ValidationError on an empty list.
LabelStats label_stats(const std::vector<EasyHardLabel>& labels);

}  // namespace af
