#include <doctest.h>

#include <cmath>

#include "af/errors.hpp"
#include "af/labeling.hpp"

using namespace af;

namespace {

// Two single-class images where the runs can be tuned to hit (p1, p2).
struct Fixture {
  std::vector<ImageRecord> images;
  DetectorRun basic;
  DetectorRun partner;

  Fixture() {
    for (const char* id : {"a", "b"}) {
      ImageRecord img;
      img.image_id = id;
      img.width = img.height = 100;
      img.objects = {{0, {10, 10, 50, 50}, false}};
      images.push_back(img);
      basic.detections[id] = {};
      partner.detections[id] = {};
    }
    basic.detector_id = "basic";
    partner.detector_id = "partner";
  }

  static Detection hit() { return {0, 0.9, {10, 10, 50, 50}}; }
};

}  // namespace

TEST_CASE("label_images: tie goes to easy, strict win to hard") {
  const ApConfig cfg;
  Fixture f;
  // image a: both perfect (tie). image b: only partner hits.
  f.basic.detections["a"] = {Fixture::hit()};
  f.partner.detections["a"] = {Fixture::hit()};
  f.partner.detections["b"] = {Fixture::hit()};

  const auto labels = label_images(f.basic, f.partner, f.images, cfg);
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].label == EasyHard::easy);
  CHECK(labels[0].p1 == doctest::Approx(1.0));
  CHECK(labels[0].p2 == doctest::Approx(1.0));
  CHECK(labels[1].label == EasyHard::hard);
  CHECK(labels[1].p1 == 0.0);
  CHECK(labels[1].p2 == doctest::Approx(1.0));
}

TEST_CASE("identical runs label everything easy") {
  const ApConfig cfg;
  Fixture f;
  f.basic.detections["a"] = {Fixture::hit()};
  f.partner.detections["a"] = {Fixture::hit()};
  const auto labels = label_images(f.basic, f.basic, f.images, cfg);
  for (const auto& l : labels) CHECK(l.label == EasyHard::easy);
}

TEST_CASE("missing coverage names the absent image") {
  const ApConfig cfg;
  Fixture f;
  f.partner.detections.erase("b");
  CHECK_THROWS_WITH_AS(label_images(f.basic, f.partner, f.images, cfg),
                       doctest::Contains("'b'"), ValidationError);
}

TEST_CASE("swapping runs flips strict-hard images and keeps ties easy") {
  const ApConfig cfg;
  Fixture f;
  f.basic.detections["a"] = {Fixture::hit()};
  f.partner.detections["a"] = {Fixture::hit()};
  f.partner.detections["b"] = {Fixture::hit()};

  const auto fwd = label_images(f.basic, f.partner, f.images, cfg);
  const auto rev = label_images(f.partner, f.basic, f.images, cfg);
  REQUIRE(fwd.size() == rev.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    if (fwd[i].label == EasyHard::hard) CHECK(rev[i].label == EasyHard::easy);
    if (fwd[i].p1 == fwd[i].p2) {
      CHECK(fwd[i].label == EasyHard::easy);
      CHECK(rev[i].label == EasyHard::easy);
    }
  }
}

TEST_CASE("label_stats reproduces the published weight arithmetic") {
  auto stats_for = [](long n_easy, long n_hard) {
    std::vector<EasyHardLabel> labels;
    for (long i = 0; i < n_easy; ++i)
      labels.push_back({"e" + std::to_string(i), 1.0, 1.0, EasyHard::easy});
    for (long i = 0; i < n_hard; ++i)
      labels.push_back({"h" + std::to_string(i), 0.0, 1.0, EasyHard::hard});
    return label_stats(labels);
  };

  // Ratios from the reported 83.7/16.3, 89.4/10.6 and 53.6/46.4 splits.
  auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  CHECK(round2(stats_for(837, 163).balanced_weight) == doctest::Approx(5.13));
  CHECK(round2(stats_for(894, 106).balanced_weight) == doctest::Approx(8.43));
  CHECK(round2(stats_for(536, 464).balanced_weight) == doctest::Approx(1.16));

  const LabelStats s = stats_for(837, 163);
  CHECK(s.n_easy + s.n_hard == 1000);
  CHECK(s.easy_ratio + s.hard_ratio == doctest::Approx(1.0));
  // Weight recomputed from ratios agrees with the count form.
  CHECK(s.easy_ratio / s.hard_ratio == doctest::Approx(s.balanced_weight).epsilon(1e-9));
}

TEST_CASE("label_stats edge cases") {
  CHECK_THROWS_AS(label_stats({}), ValidationError);
  const LabelStats s = label_stats({{"a", 1.0, 0.5, EasyHard::easy}});
  CHECK(s.n_hard == 0);
  CHECK(std::isinf(s.balanced_weight));
}
