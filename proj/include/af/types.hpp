#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "af/bbox.hpp"

namespace af {

/// Ground-truth object: class index plus box. `difficult` marks instances
/// excluded from evaluation under the default protocol.
struct GtObject {
  int class_id = 0;
  BBox bbox;
  bool difficult = false;
};

/// A scored detection emitted by some detector.
struct Detection {
  int class_id = 0;
  double score = 0.0;  // confidence in [0,1]
  BBox bbox;
};

/// One annotated image.
struct ImageRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<GtObject> objects;
};

/// Output of one detector over a dataset, keyed by image id.
struct DetectorRun {
  std::string detector_id;
  std::map<std::string, std::vector<Detection>> detections;
  std::map<std::string, double> latency_ms;  // optional, per image
  std::optional<double> nominal_fps;

  bool covers(const std::string& image_id) const {
    return detections.find(image_id) != detections.end();
  }
};

}  // namespace af
