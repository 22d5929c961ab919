#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lgss/bnet.hpp"
#include "lgss/synthetic.hpp"

using namespace lgss;

namespace {

Manifest scalar_toy_movie() {
  // 1-dim place features: shot values 2 and 3 around the single boundary
  Manifest m;
  m.movie_id = "toy";
  m.modalities = {{"place", 1}};
  for (int s = 0; s < 2; ++s) {
    Shot shot;
    shot.index = s;
    shot.start_s = s;
    shot.end_s = s + 1;
    shot.features = {{s == 0 ? 2.0f : 3.0f}};
    m.shots.push_back(shot);
  }
  return m;
}

}  // namespace

TEST_CASE("init is deterministic in seed") {
  const std::vector<std::pair<std::string, int>> dims = {{"place", 4}, {"audio", 3}};
  const BNetParams a = init_bnet_params(dims, 8, 2, 42);
  const BNetParams b = init_bnet_params(dims, 8, 2, 42);
  const BNetParams c = init_bnet_params(dims, 8, 2, 43);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("two modalities at e_m=8 give a 32-dim representation") {
  const std::vector<std::pair<std::string, int>> dims = {{"place", 4}, {"audio", 3}};
  const BNetParams p = init_bnet_params(dims, 8, 2, 1);
  CHECK(p.boundary_dim() == 32);
}

TEST_CASE("table-4 default shape: w_b=4, e_m=16, four modalities -> dim 128") {
  const std::vector<std::pair<std::string, int>> dims = {
      {"place", 16}, {"cast", 16}, {"action", 16}, {"audio", 16}};
  const BNetParams p = init_bnet_params(dims, 16, 4, 0);
  CHECK(p.boundary_dim() == 128);

  SyntheticConfig cfg;
  cfg.seed = 2;
  const Manifest m = generate_synthetic_movie(cfg);
  const Eigen::VectorXd b = bnet_forward(m, 1, p);
  CHECK(b.size() == 128);
  const Eigen::VectorXd b_edge = bnet_forward(m, m.boundary_count(), p);
  CHECK(b_edge.size() == 128);
  CHECK(b.allFinite());
}

TEST_CASE("hand-evaluated 1-dim toy: identity convs give diff 6, rel 3") {
  const Manifest m = scalar_toy_movie();
  BNetParams p = init_bnet_params({{"place", 1}}, 1, 1, 0);
  p.tensor("place.before.w")(0, 0) = 1.0;
  p.tensor("place.after.w")(0, 0) = 1.0;
  p.tensor("place.rel.w")(0, 0) = 1.0;
  p.tensor("place.before.b")(0, 0) = 0.0;
  p.tensor("place.after.b")(0, 0) = 0.0;
  p.tensor("place.rel.b")(0, 0) = 0.0;

  const Eigen::VectorXd b = bnet_forward(m, 1, p);
  REQUIRE(b.size() == 2);
  CHECK(b(0) == doctest::Approx(6.0));  // difference branch: 2 * 3
  CHECK(b(1) == doctest::Approx(3.0));  // relation branch: max(2, 3)
}

TEST_CASE("equal halves with shared conv weights give nonnegative diff part") {
  SyntheticConfig cfg;
  cfg.seed = 6;
  for (const auto& [name, dim] : cfg.modality_dims) cfg.noise_sigma[name] = 0.0;
  cfg.anchor_share_prob = 0.0;
  const Manifest m = generate_synthetic_movie(cfg);

  BNetParams p = init_bnet_params(m.modalities, 8, 2, 3);
  for (const auto& [name, dim] : m.modalities) {
    p.tensor(name + ".after.w") = p.tensor(name + ".before.w");
    p.tensor(name + ".after.b") = p.tensor(name + ".before.b");
  }
  // pick a boundary strictly inside a scene so before == after
  const auto ids = m.scene_ids();
  int boundary = -1;
  for (int i = 3; i < m.boundary_count() - 2; ++i) {
    bool uniform = true;
    for (int k = i - 2; k <= i + 1 && uniform; ++k) uniform = ids[k] == ids[i];
    if (uniform) {
      boundary = i;
      break;
    }
  }
  REQUIRE(boundary > 0);
  const Eigen::VectorXd b = bnet_forward(m, boundary, p);
  for (int k = 0; k < 8; ++k) CHECK(b(k) >= 0.0);  // first modality diff block = e .* e
}

TEST_CASE("permuting manifest modalities permutes representation blocks") {
  SyntheticConfig cfg;
  cfg.seed = 10;
  cfg.modality_dims = {{"place", 5}, {"audio", 3}};
  const Manifest m = generate_synthetic_movie(cfg);

  Manifest permuted = m;
  std::swap(permuted.modalities[0], permuted.modalities[1]);
  for (Shot& s : permuted.shots) std::swap(s.features[0], s.features[1]);
  REQUIRE(validate_manifest(permuted).empty());

  const int e = 4;
  const BNetParams p1 =
      init_bnet_params({{"place", 5}, {"audio", 3}}, e, 2, 5);
  BNetParams p2 = init_bnet_params({{"audio", 3}, {"place", 5}}, e, 2, 99);
  for (const std::string mod : {"place", "audio"}) {
    for (const std::string part : {".before.w", ".before.b", ".after.w", ".after.b", ".rel.w", ".rel.b"}) {
      p2.tensor(mod + part) = p1.tensor(mod + part);
    }
  }

  const Eigen::VectorXd b1 = bnet_forward(m, 3, p1);
  const Eigen::VectorXd b2 = bnet_forward(permuted, 3, p2);
  const int block = 2 * e;  // diff + rel per modality
  CHECK(b1.segment(0, block) == b2.segment(block, block));      // place block
  CHECK(b1.segment(block, block) == b2.segment(0, block));      // audio block
}

TEST_CASE("identical features make the rel max-pool temporally constant") {
  Manifest m;
  m.movie_id = "const";
  m.modalities = {{"place", 3}};
  for (int s = 0; s < 6; ++s) {
    Shot shot;
    shot.index = s;
    shot.start_s = s;
    shot.end_s = s + 1;
    shot.features = {{0.2f, -0.4f, 0.9f}};
    m.shots.push_back(shot);
  }
  const BNetParams p = init_bnet_params({{"place", 3}}, 4, 2, 8);
  BNetCache cache;
  bnet_forward(m, 3, p, &cache);
  const auto& z = cache.modality[0].z;
  for (int r = 0; r < z.rows(); ++r) {
    for (int t = 1; t < z.cols(); ++t) CHECK(z(r, t) == doctest::Approx(z(r, 0)));
  }
}

TEST_CASE("forward is deterministic and validates dimensions") {
  SyntheticConfig cfg;
  cfg.seed = 12;
  const Manifest m = generate_synthetic_movie(cfg);
  const BNetParams p = init_bnet_params(m.modalities, 8, 4, 7);
  const Eigen::VectorXd a = bnet_forward(m, 2, p);
  const Eigen::VectorXd b = bnet_forward(m, 2, p);
  CHECK(a == b);

  const BNetParams wrong = init_bnet_params({{"place", 7}}, 8, 4, 7);
  CHECK_THROWS_AS(bnet_forward(m, 2, wrong), ValidationError);
}
