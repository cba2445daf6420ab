#pragma once

#include <set>
#include <string>

#include "cilab/synth.hpp"
#include "cilab/training.hpp"

namespace cilab {

struct AblationFlags {
  bool use_anchor_sep = true;      // anchor + separation terms in stage 1
  bool use_compensation = true;    // stage 2 training and the beta term
  bool use_prototype_term = true;  // gamma term at inference
  bool orth_constraint = true;     // project the head into the complement
  bool proto_init = true;          // initialize the head from prototypes
};

struct EncoderConfig {
  std::size_t feature_dim = 16;
};

// Full experiment description. synth.seed doubles as the run's root seed;
// every random consumer derives a named substream from it.
struct ExperimentConfig {
  SynthConfig synth;
  EncoderConfig encoder;
  HyperParams hp;
  AblationFlags ablation;
  std::string output_dir = "out";
  std::set<std::string> report_formats = {"json", "csv"};

  void validate() const;  // throws ConfigError
};

// Strict parser: unknown keys anywhere in the document are errors, reported
// with their full path.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical JSON echo of a config; parse(echo(cfg)) reproduces cfg.
std::string config_json(const ExperimentConfig& cfg);

ExperimentConfig default_config();

}  // namespace cilab
