#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "af/eval.hpp"
#include "af/features.hpp"
#include "af/labeling.hpp"
#include "af/router.hpp"
#include "af/simulator.hpp"
#include "af/svm.hpp"
#include "af/types.hpp"

namespace af {

/// Files carry class names; memory carries ids (positions in this list).
struct ClassMap {
  std::vector<std::string> names;

  int id_of(const std::string& name, const std::string& context) const;
  const std::string& name_of(int id) const;
  int size() const { return static_cast<int>(names.size()); }
};

/// Reals in data files are written with 9 significant digits.
std::string format_real(double v);

/// Rounds through the 9-significant-digit serialized form, so a value
/// that passed through snap_real survives write-then-read unchanged.
double snap_real(double v);

/// Spec hashes travel as 16-digit hex strings in files.
std::string spec_hash_to_hex(std::uint64_t h);
std::uint64_t spec_hash_from_hex(const std::string& s, const std::string& context);

/// Writes via a temp file in the same directory plus rename, so a failed
/// command never leaves a truncated output behind.
void write_file_atomic(const std::string& path, const std::string& content);

// Line-delimited JSON readers. Malformed lines raise ValidationError with
// "<path>:<line>: <reason>"; an empty file yields an empty dataset and a
// warning on stderr.
std::vector<ImageRecord> read_ground_truth(const std::string& path, const ClassMap& classes);
DetectorRun read_detections(const std::string& path, const ClassMap& classes,
                            const std::string& detector_id);
std::map<std::string, std::vector<Proposal>> read_proposals(const std::string& path,
                                                            const ClassMap& classes);
std::vector<EasyHardLabel> read_labels(const std::string& path);

struct FeatureRow {
  std::string image_id;
  FeatureVector feature;
};
std::vector<FeatureRow> read_features(const std::string& path);

void write_ground_truth(const std::string& path, const std::vector<ImageRecord>& images,
                        const ClassMap& classes);
void write_detections(const std::string& path, const DetectorRun& run,
                      const std::vector<ImageRecord>& images, const ClassMap& classes);
void write_labels(const std::string& path, const std::vector<EasyHardLabel>& labels);
void write_features(const std::string& path, const std::vector<FeatureRow>& rows);

/// Deterministic train/eval partition: seeded shuffle of [0, n), first
/// ceil(fraction*n) indices train, rest eval; both halves in ascending
/// index order.
struct SplitConfig {
  double train_fraction = 0.7;
  std::uint64_t seed = 7;
};
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};
SplitIndices train_eval_split(std::size_t n, const SplitConfig& cfg);

struct SimulatorConfig {
  SceneConfig scene;
  DetectorProfile generator;
  DetectorProfile basic;
  DetectorProfile partner;
};

/// Paths are resolved relative to the manifest file's directory.
struct Manifest {
  std::string dir;

  std::string ground_truth_path;
  std::string run_basic_path;
  std::string run_partner_path;
  std::string proposals_path;
  std::string model_path;
  std::string output_dir;

  ClassMap classes;
  ApConfig ap;
  FeatureSpec spec;  // n_classes always classes.size()
  TrainConfig train;
  bool weight_hard_balanced = true;  // weight_hard: "balanced" or a number
  SplitConfig split;
  TimingProfile timing;
  SimulatorConfig sim;

  std::string in_output_dir(const std::string& name) const;
};

Manifest load_manifest(const std::string& path);

}  // namespace af
