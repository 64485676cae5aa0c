#include "af/features.hpp"

#include <algorithm>

#include "af/errors.hpp"
#include "af/rng.hpp"

namespace af {

namespace {

const char* class_encoding_name(ClassEncoding e) {
  switch (e) {
    case ClassEncoding::histogram: return "histogram";
    case ClassEncoding::per_proposal_prob: return "per_proposal_prob";
    case ClassEncoding::none: return "none";
  }
  return "?";
}

const char* box_encoding_name(BoxEncoding e) {
  switch (e) {
    case BoxEncoding::corners_4c: return "4c";
    case BoxEncoding::size_4s: return "4s";
    case BoxEncoding::none: return "none";
  }
  return "?";
}

}  // namespace

std::uint64_t FeatureSpec::hash() const {
  return fnv1a64(describe());
}

std::string FeatureSpec::describe() const {
  return "nc=" + std::to_string(n_classes) + ";k=" + std::to_string(k) +
         ";class=" + class_encoding_name(class_encoding) +
         ";conf=" + (include_conf ? "1" : "0") +
         ";box=" + box_encoding_name(box_encoding);
}

std::vector<Proposal> select_top_k(std::vector<Proposal> proposals, int k) {
  if (k < 1) throw ValidationError("select_top_k: k must be >= 1");
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const Proposal& a, const Proposal& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.bbox.xmin != b.bbox.xmin) return a.bbox.xmin < b.bbox.xmin;
                     if (a.bbox.ymin != b.bbox.ymin) return a.bbox.ymin < b.bbox.ymin;
                     return a.class_id < b.class_id;
                   });
  if (proposals.size() > static_cast<std::size_t>(k)) proposals.resize(k);
  return proposals;
}

FeatureVector encode(const std::vector<Proposal>& proposals,
                     const ImageRecord& image, const FeatureSpec& spec) {
  if (proposals.size() > static_cast<std::size_t>(spec.k))
    throw ValidationError("encode: got " + std::to_string(proposals.size()) +
                          " proposals for k=" + std::to_string(spec.k) +
                          "; run select_top_k first");
  if (image.width <= 0 || image.height <= 0)
    throw ValidationError("encode: image '" + image.image_id + "' has empty extent");

  FeatureVector out;
  out.spec_hash = spec.hash();
  out.values.assign(spec.dimension(), 0.0);

  const double w = image.width;
  const double h = image.height;

  if (spec.class_encoding == ClassEncoding::histogram) {
    for (const auto& p : proposals) {
      if (p.class_id < 0 || p.class_id >= spec.n_classes)
        throw ValidationError("encode: proposal class " + std::to_string(p.class_id) +
                              " outside [0," + std::to_string(spec.n_classes) + ")");
      out.values[p.class_id] += 1.0;
    }
  }

  std::size_t offset = spec.histogram_dim();
  for (const auto& p : proposals) {
    std::size_t pos = offset;
    if (spec.class_encoding == ClassEncoding::per_proposal_prob) {
      if (p.probs.has_value()) {
        if (static_cast<int>(p.probs->size()) != spec.n_classes)
          throw ValidationError("encode: probability vector of length " +
                                std::to_string(p.probs->size()) + ", expected " +
                                std::to_string(spec.n_classes));
        for (double v : *p.probs) out.values[pos++] = v;
      } else {
        // Hard-classed generators get a one-hot substitute.
        if (p.class_id < 0 || p.class_id >= spec.n_classes)
          throw ValidationError("encode: proposal class " + std::to_string(p.class_id) +
                                " outside [0," + std::to_string(spec.n_classes) + ")");
        out.values[pos + p.class_id] = 1.0;
        pos += spec.n_classes;
      }
    }
    if (spec.include_conf) out.values[pos++] = p.score;
    if (spec.box_encoding != BoxEncoding::none) {
      const BBox b = clamp_bbox(p.bbox, w, h);
      out.values[pos++] = b.xmin / w;
      out.values[pos++] = b.ymin / h;
      if (spec.box_encoding == BoxEncoding::corners_4c) {
        out.values[pos++] = b.xmax / w;
        out.values[pos++] = b.ymax / h;
      } else {
        out.values[pos++] = b.width() / w;
        out.values[pos++] = b.height() / h;
      }
    }
    offset += spec.block_dim();
  }
  return out;
}

FeatureSpec class_agnostic_spec(int k) {
  if (k < 1) throw ValidationError("class_agnostic_spec: k must be >= 1");
  FeatureSpec spec;
  spec.n_classes = 0;
  spec.k = k;
  spec.class_encoding = ClassEncoding::none;
  spec.include_conf = true;
  spec.box_encoding = BoxEncoding::size_4s;
  return spec;
}

}  // namespace af
