#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "cilab/error.hpp"
#include "cilab/rng.hpp"
#include "cilab/synth.hpp"

using namespace cilab;

TEST_CASE("stream has the configured task and class structure") {
  SynthConfig cfg;
  cfg.num_tasks = 5;
  cfg.classes_per_task = 4;
  auto tasks = generate_task_stream(cfg);
  REQUIRE(tasks.size() == 5);
  std::set<int> all_classes;
  for (const auto& t : tasks) {
    CHECK(t.class_ids.size() == 4);
    for (int c : t.class_ids) CHECK(all_classes.insert(c).second);  // disjointness
    for (const auto& s : t.train)
      CHECK(std::count(t.class_ids.begin(), t.class_ids.end(), s.label) == 1);
    CHECK(!t.train.empty());
    CHECK(!t.val.empty());
    CHECK(t.train.size() + t.val.size() == 4 * cfg.samples_per_class);
    CHECK(t.prompts.size() == 4);
  }
  CHECK(all_classes.size() == 20);
}

TEST_CASE("identical config gives a byte-identical stream") {
  SynthConfig cfg;
  cfg.seed = 1234;
  auto a = generate_task_stream(cfg);
  auto b = generate_task_stream(cfg);
  CHECK(dataset_json(cfg, a) == dataset_json(cfg, b));
  REQUIRE(a.size() == b.size());
  for (std::size_t t = 0; t < a.size(); ++t) {
    REQUIRE(a[t].train.size() == b[t].train.size());
    for (std::size_t i = 0; i < a[t].train.size(); ++i)
      CHECK(a[t].train[i].latent == b[t].train[i].latent);
  }
}

TEST_CASE("zero gap and zero noise put samples on their text latent") {
  SynthConfig cfg;
  cfg.gap_angle = 0.0;
  cfg.intra_class_noise = 0.0;
  cfg.num_tasks = 2;
  auto tasks = generate_task_stream(cfg);
  for (const auto& t : tasks) {
    for (const auto& s : t.train)
      CHECK(cosine(s.latent, t.prompts.at(s.label)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("raw sim_pos strictly decreases as the gap widens") {
  double prev = 2.0;
  for (double angle : {0.0, 0.3, 0.7, 1.1, 1.5}) {
    SynthConfig cfg;
    cfg.gap_angle = angle;
    cfg.intra_class_noise = 0.0;
    cfg.num_tasks = 2;
    auto tasks = generate_task_stream(cfg);
    std::vector<Vector> imgs, txts;
    std::vector<int> labels;
    for (const auto& t : tasks) {
      for (int c : t.class_ids) txts.push_back(normalized(t.prompts.at(c)));
      for (const auto& s : t.train) {
        imgs.push_back(normalized(s.latent));
        labels.push_back(s.label);
      }
    }
    const auto stats = measure_modality_gap(imgs, txts, labels);
    CHECK(stats.sim_pos < prev);
    prev = stats.sim_pos;
  }
}

TEST_CASE("gap stats on hand-built pairs") {
  Vector e1{1, 0, 0}, e2{0, 1, 0};

  SUBCASE("one identical pair") {
    auto s = measure_modality_gap({e1}, {e1}, {0});
    CHECK(s.sim_all == doctest::Approx(1.0));
    CHECK(s.sim_pos == doctest::Approx(1.0));
    CHECK(!s.sim_neg.has_value());
  }
  SUBCASE("one orthogonal pair") {
    auto s = measure_modality_gap({e1}, {e2}, {0});
    CHECK(s.sim_all == doctest::Approx(0.0));
  }
  SUBCASE("two by two with identity diagonal") {
    auto s = measure_modality_gap({e1, e2}, {e1, e2}, {0, 1});
    CHECK(s.sim_all == doctest::Approx(0.5));
    CHECK(s.sim_pos == doctest::Approx(1.0));
    REQUIRE(s.sim_neg.has_value());
    CHECK(*s.sim_neg == doctest::Approx(0.0));
  }
}

TEST_CASE("gap stats ordering property") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> imgs, txts;
    std::vector<int> labels;
    const std::size_t n_txt = 2 + rng.uniform_int(4);
    for (std::size_t j = 0; j < n_txt; ++j) txts.push_back(normalized(rng.gaussian_vector(6)));
    const std::size_t n_img = 1 + rng.uniform_int(6);
    for (std::size_t i = 0; i < n_img; ++i) {
      imgs.push_back(normalized(rng.gaussian_vector(6)));
      labels.push_back(static_cast<int>(rng.uniform_int(n_txt)));
    }
    const auto s = measure_modality_gap(imgs, txts, labels);
    REQUIRE(s.sim_neg.has_value());
    if (s.sim_pos >= *s.sim_neg) {
      CHECK(s.sim_all <= s.sim_pos + 1e-12);
      CHECK(s.sim_all >= *s.sim_neg - 1e-12);
    }
  }
}

TEST_CASE("gap measurement input errors") {
  Vector e1{1, 0};
  CHECK_THROWS_AS(measure_modality_gap({}, {e1}, {}), InputError);
  CHECK_THROWS_AS(measure_modality_gap({e1}, {}, {0}), InputError);
  CHECK_THROWS_AS(measure_modality_gap({e1}, {e1}, {3}), InputError);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.latent_dim = 1;
  CHECK_THROWS_AS(generate_task_stream(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.classes_per_task = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.val_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.gap_angle = 2.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
