#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cilab/matrix.hpp"

namespace cilab {

// Configuration of a synthetic incremental stream. Every class gets an image
// cluster (a mean direction plus isotropic noise) and a canonical text latent
// placed gap_angle radians away from the cluster mean, which makes the
// image/text modality gap a controlled knob instead of an observed artifact.
struct SynthConfig {
  std::size_t num_tasks = 5;
  std::size_t classes_per_task = 4;
  std::size_t samples_per_class = 20;
  std::size_t latent_dim = 12;
  double intra_class_noise = 0.25;
  double gap_angle = 0.5;     // radians, in [0, pi/2]
  double val_fraction = 0.25; // per-class validation share, in (0, 1)
  std::uint64_t seed = 42;    // root seed of the whole run

  void validate() const;  // throws ConfigError
};

struct Sample {
  Vector latent;
  int label;  // global class id
};

struct TaskDataset {
  int task_id = 0;
  std::vector<int> class_ids;  // sorted, disjoint across tasks
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::map<int, Vector> prompts;  // canonical text latent per class
};

struct GapStats {
  double sim_all = 0.0;
  double sim_pos = 0.0;
  std::optional<double> sim_neg;  // absent when there are no negative pairs
};

// Deterministic stream generation: identical config -> bit-identical stream.
std::vector<TaskDataset> generate_task_stream(const SynthConfig& cfg);

// Mean cosine over all image/text pairs plus the positive- and negative-pair
// averages. labels[i] is the index into text_feats that matches image i.
// All feature vectors are expected unit-normalized by the caller.
GapStats measure_modality_gap(const std::vector<Vector>& image_feats,
                              const std::vector<Vector>& text_feats,
                              const std::vector<int>& labels);

// JSON dump of a stream, floats with 17 significant digits.
std::string dataset_json(const SynthConfig& cfg, const std::vector<TaskDataset>& tasks);

}  // namespace cilab
