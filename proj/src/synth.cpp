#include "cilab/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "cilab/error.hpp"
#include "cilab/rng.hpp"

namespace cilab {

void SynthConfig::validate() const {
  if (num_tasks < 1) throw ConfigError("synth.num_tasks must be >= 1");
  if (classes_per_task < 2) throw ConfigError("synth.classes_per_task must be >= 2");
  if (samples_per_class < 2)
    throw ConfigError("synth.samples_per_class must be >= 2 to allow a train/val split");
  if (latent_dim < 2) throw ConfigError("synth.latent_dim must be >= 2");
  if (!(intra_class_noise >= 0.0)) throw ConfigError("synth.intra_class_noise must be >= 0");
  if (!(gap_angle >= 0.0 && gap_angle <= std::numbers::pi / 2.0))
    throw ConfigError("synth.gap_angle must lie in [0, pi/2]");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("synth.val_fraction must lie in (0, 1)");
}

namespace {

// Unit vector orthogonal to dir, drawn from rng. Redraws on near-parallel
// candidates so the result is always well conditioned.
Vector orthogonal_unit(const Vector& dir, Rng& rng) {
  for (;;) {
    Vector w = rng.gaussian_vector(dir.size());
    const double proj = dot(w, dir);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * dir[i];
    const double n = norm(w);
    if (n > 1e-6) {
      for (auto& x : w) x /= n;
      return w;
    }
  }
}

}  // namespace

std::vector<TaskDataset> generate_task_stream(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::substream(cfg.seed, "data");

  std::size_t n_val = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.samples_per_class) * cfg.val_fraction));
  if (n_val < 1) n_val = 1;
  if (n_val >= cfg.samples_per_class) n_val = cfg.samples_per_class - 1;
  const std::size_t n_train = cfg.samples_per_class - n_val;

  std::vector<TaskDataset> tasks(cfg.num_tasks);
  int next_class = 0;
  for (std::size_t t = 0; t < cfg.num_tasks; ++t) {
    TaskDataset& task = tasks[t];
    task.task_id = static_cast<int>(t);
    for (std::size_t c = 0; c < cfg.classes_per_task; ++c) {
      const int class_id = next_class++;
      task.class_ids.push_back(class_id);

      const Vector mean = normalized(rng.gaussian_vector(cfg.latent_dim));
      const Vector ortho = orthogonal_unit(mean, rng);
      Vector prompt(cfg.latent_dim);
      const double ca = std::cos(cfg.gap_angle);
      const double sa = std::sin(cfg.gap_angle);
      for (std::size_t i = 0; i < cfg.latent_dim; ++i)
        prompt[i] = ca * mean[i] + sa * ortho[i];
      task.prompts[class_id] = prompt;

      for (std::size_t s = 0; s < cfg.samples_per_class; ++s) {
        // Noise draws happen unconditionally so streams with different noise
        // levels stay sample-aligned.
        Vector x = mean;
        for (std::size_t i = 0; i < cfg.latent_dim; ++i)
          x[i] += cfg.intra_class_noise * rng.gaussian();
        Sample sample{std::move(x), class_id};
        if (s < n_train)
          task.train.push_back(std::move(sample));
        else
          task.val.push_back(std::move(sample));
      }
    }
  }
  return tasks;
}

GapStats measure_modality_gap(const std::vector<Vector>& image_feats,
                              const std::vector<Vector>& text_feats,
                              const std::vector<int>& labels) {
  if (image_feats.empty() || text_feats.empty())
    throw InputError("measure_modality_gap: empty inputs");
  if (labels.size() != image_feats.size())
    throw InputError("measure_modality_gap: labels do not align with image features");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= text_feats.size())
      throw InputError("measure_modality_gap: label outside text feature range");

  double sum_all = 0.0, sum_pos = 0.0, sum_neg = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < image_feats.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < text_feats.size(); ++j) {
      const double c = dot(image_feats[i], text_feats[j]);
      row += c;
      if (static_cast<std::size_t>(labels[i]) == j) {
        sum_pos += c;
        ++n_pos;
      } else {
        sum_neg += c;
        ++n_neg;
      }
    }
    sum_all += row / static_cast<double>(text_feats.size());
  }

  GapStats stats;
  stats.sim_all = sum_all / static_cast<double>(image_feats.size());
  stats.sim_pos = sum_pos / static_cast<double>(n_pos);
  if (n_neg > 0) stats.sim_neg = sum_neg / static_cast<double>(n_neg);
  return stats;
}

namespace {

void append_double(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

void append_vector(std::string& out, const Vector& v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    append_double(out, v[i]);
  }
  out += ']';
}

void append_samples(std::string& out, const std::vector<Sample>& samples) {
  out += '[';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i) out += ',';
    out += "{\"latent\":";
    append_vector(out, samples[i].latent);
    out += ",\"label\":" + std::to_string(samples[i].label) + "}";
  }
  out += ']';
}

}  // namespace

std::string dataset_json(const SynthConfig& cfg, const std::vector<TaskDataset>& tasks) {
  std::string out = "{\"config\":{";
  out += "\"num_tasks\":" + std::to_string(cfg.num_tasks);
  out += ",\"classes_per_task\":" + std::to_string(cfg.classes_per_task);
  out += ",\"samples_per_class\":" + std::to_string(cfg.samples_per_class);
  out += ",\"latent_dim\":" + std::to_string(cfg.latent_dim);
  out += ",\"intra_class_noise\":";
  append_double(out, cfg.intra_class_noise);
  out += ",\"gap_angle\":";
  append_double(out, cfg.gap_angle);
  out += ",\"val_fraction\":";
  append_double(out, cfg.val_fraction);
  out += ",\"seed\":" + std::to_string(cfg.seed);
  out += "},\"tasks\":[";
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (t) out += ',';
    out += "{\"task_id\":" + std::to_string(tasks[t].task_id);
    out += ",\"class_ids\":[";
    for (std::size_t c = 0; c < tasks[t].class_ids.size(); ++c) {
      if (c) out += ',';
      out += std::to_string(tasks[t].class_ids[c]);
    }
    out += "],\"train\":";
    append_samples(out, tasks[t].train);
    out += ",\"val\":";
    append_samples(out, tasks[t].val);
    out += '}';
  }
  out += "]}";
  return out;
}

}  // namespace cilab
