#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "af/types.hpp"

namespace af {

enum class ClassEncoding { histogram, per_proposal_prob, none };
enum class BoxEncoding { corners_4c, size_4s, none };

/// Declarative recipe for turning the top-K instance proposals of an
/// image into a fixed-length vector. The default VOC recipe is a
/// 20-bin class histogram followed by 25 blocks of (conf, xmin, ymin,
/// w, h), 145 dims total.
struct FeatureSpec {
  int n_classes = 20;
  int k = 25;
  ClassEncoding class_encoding = ClassEncoding::histogram;
  bool include_conf = true;
  BoxEncoding box_encoding = BoxEncoding::size_4s;

  int conf_dim() const { return include_conf ? 1 : 0; }
  int box_dim() const { return box_encoding == BoxEncoding::none ? 0 : 4; }
  int block_dim() const {
    const int prob = class_encoding == ClassEncoding::per_proposal_prob ? n_classes : 0;
    return prob + conf_dim() + box_dim();
  }
  int histogram_dim() const {
    return class_encoding == ClassEncoding::histogram ? n_classes : 0;
  }
  int dimension() const { return histogram_dim() + k * block_dim(); }

  /// Stable identity of the recipe; embedded in feature vectors and in
  /// persisted models so a model is never applied to mismatched features.
  std::uint64_t hash() const;
  std::string describe() const;  // compact human-readable form
};

/// Instance proposal: a detection, optionally carrying a per-class
/// probability vector (required data for the per_proposal_prob recipe;
/// a one-hot vector is substituted when absent).
struct Proposal {
  int class_id = 0;
  double score = 0.0;
  BBox bbox;
  std::optional<std::vector<double>> probs;
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t spec_hash = 0;
};

/// Keeps the k highest-scored proposals; ties broken by (xmin, ymin,
/// class_id) ascending. Returns fewer than k when fewer exist.
std::vector<Proposal> select_top_k(std::vector<Proposal> proposals, int k);

/// Encodes already-selected proposals. Blocks appear in score order;
/// missing proposals pad with zero blocks. Boxes are clamped to the
/// image, then normalized by its width/height, so every box-derived
/// entry lies in [0,1].
FeatureVector encode(const std::vector<Proposal>& proposals,
                     const ImageRecord& image, const FeatureSpec& spec);

/// The class-agnostic recipe: (conf + 4s) x k, 5k dims, no class input.
FeatureSpec class_agnostic_spec(int k);

}  // namespace af
