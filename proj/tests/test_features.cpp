#include <doctest.h>

#include "af/errors.hpp"
#include "af/features.hpp"
#include "af/rng.hpp"

using namespace af;

namespace {

ImageRecord image_200x100() {
  ImageRecord img;
  img.image_id = "img";
  img.width = 200;
  img.height = 100;
  return img;
}

Proposal prop(double score, BBox b, int cls = 0) { return {cls, score, b, std::nullopt}; }

}  // namespace

TEST_CASE("spec dimensions match the published recipes") {
  FeatureSpec voc;  // 20 + (conf+4s) x 25
  CHECK(voc.dimension() == 145);

  FeatureSpec coco;  // 80 + (conf+4s) x 50
  coco.n_classes = 80;
  coco.k = 50;
  CHECK(coco.dimension() == 330);

  CHECK(class_agnostic_spec(25).dimension() == 125);
  CHECK(class_agnostic_spec(1).dimension() == 5);

  FeatureSpec prob;  // (20-prob + conf + 4s) x 25
  prob.class_encoding = ClassEncoding::per_proposal_prob;
  CHECK(prob.dimension() == 25 * (20 + 1 + 4));

  FeatureSpec conf_only;  // 20 + conf x 25
  conf_only.box_encoding = BoxEncoding::none;
  CHECK(conf_only.dimension() == 45);
}

TEST_CASE("select_top_k orders by score and breaks ties deterministically") {
  std::vector<Proposal> proposals;
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    const double x = rng.uniform(0, 150), y = rng.uniform(0, 80);
    proposals.push_back(prop(rng.uniform_index(4) / 4.0, {x, y, x + 10, y + 10}));
  }
  const auto top = select_top_k(proposals, 25);
  REQUIRE(top.size() == 25);
  for (std::size_t i = 1; i < top.size(); ++i) {
    CHECK(top[i - 1].score >= top[i].score);
    if (top[i - 1].score == top[i].score) {
      const bool ordered = top[i - 1].bbox.xmin < top[i].bbox.xmin ||
                           (top[i - 1].bbox.xmin == top[i].bbox.xmin &&
                            top[i - 1].bbox.ymin <= top[i].bbox.ymin);
      CHECK(ordered);
    }
  }

  const auto few = select_top_k({prop(0.5, {0, 0, 1, 1})}, 25);
  CHECK(few.size() == 1);
}

TEST_CASE("encode lays out histogram then per-proposal blocks") {
  FeatureSpec spec;
  spec.n_classes = 3;
  spec.k = 2;
  const ImageRecord img = image_200x100();

  const std::vector<Proposal> proposals{prop(0.8, {20, 10, 120, 60}, 1),
                                        prop(0.6, {0, 0, 50, 50}, 2)};
  const FeatureVector f = encode(proposals, img, spec);
  REQUIRE(f.values.size() == 3 + 2 * 5);
  CHECK(f.spec_hash == spec.hash());

  // histogram: classes 1 and 2 once each
  CHECK(f.values[0] == 0.0);
  CHECK(f.values[1] == 1.0);
  CHECK(f.values[2] == 1.0);
  // block 0: conf, then 4s normalized by 200x100
  CHECK(f.values[3] == doctest::Approx(0.8));
  CHECK(f.values[4] == doctest::Approx(0.1));   // 20/200
  CHECK(f.values[5] == doctest::Approx(0.1));   // 10/100
  CHECK(f.values[6] == doctest::Approx(0.5));   // 100/200
  CHECK(f.values[7] == doctest::Approx(0.5));   // 50/100
  // block 1
  CHECK(f.values[8] == doctest::Approx(0.6));
  CHECK(f.values[9] == 0.0);
  CHECK(f.values[11] == doctest::Approx(0.25));  // 50/200
}

TEST_CASE("encode pads with zero blocks and clamps out-of-bounds boxes") {
  FeatureSpec spec;
  spec.n_classes = 2;
  spec.k = 3;
  const ImageRecord img = image_200x100();

  SUBCASE("zero proposals give the all-zero vector") {
    const FeatureVector f = encode({}, img, spec);
    for (double v : f.values) CHECK(v == 0.0);
    CHECK(static_cast<int>(f.values.size()) == spec.dimension());
  }
  SUBCASE("out-of-bounds box is clamped before normalizing") {
    const FeatureVector f = encode({prop(1.0, {-20, -10, 250, 120}, 0)}, img, spec);
    for (std::size_t i = spec.histogram_dim() + 1; i < f.values.size(); ++i) {
      CHECK(f.values[i] >= 0.0);
      CHECK(f.values[i] <= 1.0);
    }
    CHECK(f.values[3] == 0.0);  // xmin clamped to 0
    CHECK(f.values[5] == 1.0);  // width spans the image
  }
  SUBCASE("more proposals than k is a contract violation") {
    std::vector<Proposal> many(4, prop(0.5, {0, 0, 10, 10}));
    CHECK_THROWS_AS(encode(many, img, spec), ValidationError);
  }
}

TEST_CASE("corner encoding stores xmax/ymax instead of size") {
  FeatureSpec spec;
  spec.n_classes = 2;
  spec.k = 1;
  spec.box_encoding = BoxEncoding::corners_4c;
  const FeatureVector f = encode({prop(1.0, {20, 10, 120, 60}, 0)}, image_200x100(), spec);
  CHECK(f.values[2 + 1 + 2] == doctest::Approx(0.6));  // 120/200
  CHECK(f.values[2 + 1 + 3] == doctest::Approx(0.6));  // 60/100
}

TEST_CASE("per-proposal probability encoding") {
  FeatureSpec spec;
  spec.n_classes = 3;
  spec.k = 1;
  spec.class_encoding = ClassEncoding::per_proposal_prob;
  const ImageRecord img = image_200x100();

  SUBCASE("explicit probability vector is copied") {
    Proposal p = prop(0.9, {0, 0, 20, 20}, 1);
    p.probs = std::vector<double>{0.1, 0.7, 0.2};
    const FeatureVector f = encode({p}, img, spec);
    CHECK(f.values[0] == doctest::Approx(0.1));
    CHECK(f.values[1] == doctest::Approx(0.7));
    CHECK(f.values[2] == doctest::Approx(0.2));
    CHECK(f.values[3] == doctest::Approx(0.9));
  }
  SUBCASE("hard class becomes a one-hot substitute") {
    const FeatureVector f = encode({prop(0.9, {0, 0, 20, 20}, 2)}, img, spec);
    CHECK(f.values[0] == 0.0);
    CHECK(f.values[1] == 0.0);
    CHECK(f.values[2] == 1.0);
  }
  SUBCASE("wrong-length probability vector is rejected") {
    Proposal p = prop(0.9, {0, 0, 20, 20}, 1);
    p.probs = std::vector<double>{0.5, 0.5};
    CHECK_THROWS_AS(encode({p}, img, spec), ValidationError);
  }
}

TEST_CASE("class-agnostic encoding never reads the class id") {
  const FeatureSpec spec = class_agnostic_spec(2);
  const ImageRecord img = image_200x100();
  // Class ids far outside any universe must not matter.
  const FeatureVector f =
      encode({prop(0.7, {10, 10, 30, 30}, 999), prop(0.5, {0, 0, 20, 20}, -5)}, img, spec);
  CHECK(static_cast<int>(f.values.size()) == 10);
  CHECK(f.values[0] == doctest::Approx(0.7));
  CHECK(f.values[5] == doctest::Approx(0.5));
}

TEST_CASE("feature properties over random proposal sets") {
  FeatureSpec spec;
  spec.n_classes = 4;
  spec.k = 6;
  const ImageRecord img = image_200x100();
  Rng rng(17);

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Proposal> proposals;
    const int n = static_cast<int>(rng.uniform_index(10));
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(-20, 190), y = rng.uniform(-20, 90);
      proposals.push_back(prop(rng.uniform_index(3) / 2.0,
                               {x, y, x + rng.uniform(0, 80), y + rng.uniform(0, 40)},
                               static_cast<int>(rng.uniform_index(4))));
    }
    const auto top = select_top_k(proposals, spec.k);
    const FeatureVector f = encode(top, img, spec);

    // Histogram mass equals the retained count.
    double hist = 0.0;
    for (int c = 0; c < spec.n_classes; ++c) hist += f.values[c];
    CHECK(hist == doctest::Approx(std::min<std::size_t>(n, spec.k)));

    // Box-derived entries stay in [0,1] and blocks round-trip the
    // clamped, normalized proposal exactly.
    for (std::size_t b = 0; b < top.size(); ++b) {
      const std::size_t base = spec.histogram_dim() + b * spec.block_dim();
      CHECK(f.values[base] == top[b].score);
      const BBox clamped = clamp_bbox(top[b].bbox, img.width, img.height);
      CHECK(f.values[base + 1] == clamped.xmin / img.width);
      CHECK(f.values[base + 2] == clamped.ymin / img.height);
      CHECK(f.values[base + 3] == clamped.width() / img.width);
      CHECK(f.values[base + 4] == clamped.height() / img.height);
      for (int d = 1; d <= 4; ++d) {
        CHECK(f.values[base + d] >= 0.0);
        CHECK(f.values[base + d] <= 1.0);
      }
    }

    // Deterministic under reshuffled input.
    std::vector<Proposal> shuffled = proposals;
    for (std::size_t j = shuffled.size(); j-- > 1;)
      std::swap(shuffled[j], shuffled[rng.uniform_index(j + 1)]);
    const FeatureVector again = encode(select_top_k(shuffled, spec.k), img, spec);
    CHECK(again.values == f.values);
  }
}
