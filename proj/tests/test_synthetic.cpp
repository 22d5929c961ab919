#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lgss/synthetic.hpp"

using namespace lgss;

TEST_CASE("same seed, same movie") {
  SyntheticConfig cfg;
  cfg.seed = 7;
  const Manifest a = generate_synthetic_movie(cfg);
  const Manifest b = generate_synthetic_movie(cfg);
  CHECK(manifests_equal(a, b));

  cfg.seed = 8;
  const Manifest c = generate_synthetic_movie(cfg);
  CHECK(!manifests_equal(a, c));
}

TEST_CASE("zero noise collapses each scene to its anchor") {
  SyntheticConfig cfg;
  cfg.seed = 5;
  for (const auto& [name, dim] : cfg.modality_dims) cfg.noise_sigma[name] = 0.0;
  const Manifest m = generate_synthetic_movie(cfg);
  const auto ids = m.scene_ids();
  for (int s = 1; s < m.shot_count(); ++s) {
    if (ids[s] != ids[s - 1]) continue;
    for (size_t mi = 0; mi < m.modalities.size(); ++mi) {
      CHECK(m.shots[s].features[mi] == m.shots[s - 1].features[mi]);
    }
  }
  // all features unit-norm at zero noise
  for (const Shot& shot : m.shots) {
    for (const auto& feat : shot.features) {
      double norm = 0.0;
      for (float v : feat) norm += static_cast<double>(v) * v;
      CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
}

TEST_CASE("fixed ranges force exact shot and boundary counts") {
  SyntheticConfig cfg;
  cfg.seed = 123;
  cfg.n_scenes_min = 5;
  cfg.n_scenes_max = 5;
  cfg.shots_per_scene_min = 4;
  cfg.shots_per_scene_max = 4;
  const Manifest m = generate_synthetic_movie(cfg);
  CHECK(m.shot_count() == 20);
  REQUIRE(m.gt.has_value());
  CHECK(m.gt->boundaries.size() == 4);
}

TEST_CASE("boundary count is scene count minus one, shots contiguous") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    SyntheticConfig cfg;
    cfg.seed = seed;
    const Manifest m = generate_synthetic_movie(cfg);
    CHECK(validate_manifest(m).empty());
    REQUIRE(m.gt.has_value());
    const auto ids = m.scene_ids();
    CHECK(static_cast<size_t>(ids.back() + 1) == m.gt->boundaries.size() + 1);
  }
}

TEST_CASE("config validation rejects bad ranges") {
  SyntheticConfig cfg;
  cfg.n_scenes_max = cfg.n_scenes_min - 1;
  CHECK_THROWS_AS(generate_synthetic_movie(cfg), ValidationError);

  SyntheticConfig cfg2;
  cfg2.anchor_share_prob = 1.5;
  CHECK_THROWS_AS(generate_synthetic_movie(cfg2), ValidationError);

  SyntheticConfig cfg3;
  cfg3.noise_sigma["place"] = -0.1;
  CHECK_THROWS_AS(generate_synthetic_movie(cfg3), ValidationError);
}

TEST_CASE("corpus ids and seeds are per movie") {
  SyntheticConfig cfg;
  cfg.seed = 9;
  const auto corpus = generate_synthetic_corpus(cfg, 3, "train_");
  REQUIRE(corpus.size() == 3);
  CHECK(corpus[0].movie_id == "train_0000");
  CHECK(corpus[2].movie_id == "train_0002");
  CHECK(!manifests_equal(corpus[0], corpus[1]));
}
