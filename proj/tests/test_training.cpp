#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lgss/sequence.hpp"
#include "lgss/synthetic.hpp"

using namespace lgss;

namespace {

SyntheticConfig toy_synth(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.n_scenes_min = 3;
  cfg.n_scenes_max = 4;
  cfg.shots_per_scene_min = 4;
  cfg.shots_per_scene_max = 6;
  cfg.modality_dims = {{"place", 3}, {"audio", 2}};
  return cfg;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences on toy dims") {
  const Manifest m = generate_synthetic_movie(toy_synth(21));
  const BNetParams bnet = init_bnet_params(m.modalities, 3, 2, 5);
  const SeqParams seq = init_seq_params(bnet.boundary_dim(), 4, 6, 6);
  const auto windows = movie_windows(m, seq.config.window);
  REQUIRE(windows.size() >= 2);
  const std::vector<WindowRef> batch(windows.begin(), windows.begin() + 2);

  const double err = gradient_check(bnet, seq, batch, 1e-4);
  CHECK(err < 1e-3);
  // residual error is finite-difference roundoff on near-zero gradient
  // entries, so the gate should clear with a wide margin
  CHECK(err < 5e-4);
}

TEST_CASE("corrupting one analytic gradient entry is detected") {
  const Manifest m = generate_synthetic_movie(toy_synth(22));
  const BNetParams bnet = init_bnet_params(m.modalities, 3, 2, 15);
  const SeqParams seq = init_seq_params(bnet.boundary_dim(), 4, 6, 16);
  const std::vector<WindowRef> batch = {movie_windows(m, seq.config.window).front()};

  Eigen::VectorXd gb, gs;
  batch_loss_and_grad(batch, bnet, seq, 1.0, 9.0, &gb, &gs);
  Eigen::VectorXd analytic(gb.size() + gs.size());
  analytic << gb, gs;
  const Eigen::VectorXd fd = fd_batch_gradient(batch, bnet, seq, 1.0, 9.0, 1e-4);

  // corrupt the largest-magnitude entry by +10%
  Eigen::Index worst = 0;
  analytic.cwiseAbs().maxCoeff(&worst);
  Eigen::VectorXd corrupted = analytic;
  corrupted(worst) *= 1.10;

  const double clean_err = max_relative_error(analytic, fd);
  const double corrupt_err = max_relative_error(corrupted, fd);
  CHECK(clean_err < 1e-3);
  // |1.1g - g| / (|1.1g| + |g|) = 0.1 / 2.1 ~ 0.0476 under this error metric
  CHECK(corrupt_err > 4.5e-2);
  CHECK(corrupt_err > 1e-3);
}

TEST_CASE("saturated all-correct predictions give near-zero gradients") {
  // one window, labels all zero, head bias pushed very negative -> p ~ 0
  const Manifest m = [] {
    SyntheticConfig cfg = toy_synth(23);
    cfg.n_scenes_min = 1;
    cfg.n_scenes_max = 1;
    cfg.shots_per_scene_min = 8;
    cfg.shots_per_scene_max = 8;
    return generate_synthetic_movie(cfg);
  }();
  const BNetParams bnet = init_bnet_params(m.modalities, 2, 1, 1);
  SeqParams seq = init_seq_params(bnet.boundary_dim(), 2, 6, 2);
  seq.tensor("head.w").setZero();
  seq.tensor("head.b")(0, 0) = -30.0;
  const std::vector<WindowRef> batch = {movie_windows(m, seq.config.window).front()};

  Eigen::VectorXd gb, gs;
  const double loss = batch_loss_and_grad(batch, bnet, seq, 1.0, 9.0, &gb, &gs);
  CHECK(loss <= 9.0 * -std::log(1.0 - 1e-7));  // clamp floor
  CHECK(gb.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(gs.cwiseAbs().maxCoeff() < 1e-10);
  // error metric stays defined through the 1e-8 floor
  const double err = gradient_check(bnet, seq, batch, 1e-4);
  CHECK(err < 1e-3);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const Manifest m = generate_synthetic_movie(toy_synth(24));
  BNetParams bnet = init_bnet_params(m.modalities, 3, 2, 3);
  SeqParams seq = init_seq_params(bnet.boundary_dim(), 4, 6, 4);
  const Eigen::VectorXd bnet_before = bnet.values;
  const Eigen::VectorXd seq_before = seq.values;

  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  const auto history = train_pipeline({m}, bnet, seq, cfg);
  REQUIRE(history.size() == 1);
  CHECK(bnet.values == bnet_before);
  CHECK(seq.values == seq_before);
}

TEST_CASE("training is bit-for-bit reproducible in the seed") {
  const auto corpus = generate_synthetic_corpus(toy_synth(25), 2, "m");
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 77;

  BNetParams b1 = init_bnet_params(corpus[0].modalities, 3, 2, 8);
  SeqParams s1 = init_seq_params(b1.boundary_dim(), 4, 6, 9);
  BNetParams b2 = b1;
  SeqParams s2 = s1;

  const auto h1 = train_pipeline(corpus, b1, s1, cfg);
  const auto h2 = train_pipeline(corpus, b2, s2, cfg);
  CHECK(b1.values == b2.values);
  CHECK(s1.values == s2.values);
  REQUIRE(h1.size() == h2.size());
  for (size_t e = 0; e < h1.size(); ++e) CHECK(h1[e].mean_loss == h2[e].mean_loss);
}

TEST_CASE("easy corpus trains to a lower loss") {
  SyntheticConfig synth = toy_synth(26);
  synth.anchor_share_prob = 0.0;
  synth.noise_sigma = {{"place", 0.2}, {"audio", 0.2}};
  const auto corpus = generate_synthetic_corpus(synth, 4, "easy");

  BNetParams bnet = init_bnet_params(corpus[0].modalities, 4, 2, 31);
  SeqParams seq = init_seq_params(bnet.boundary_dim(), 6, 6, 32);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 1;
  const auto history = train_pipeline(corpus, bnet, seq, cfg);
  REQUIRE(history.size() == 8);
  CHECK(history.back().mean_loss < history.front().mean_loss);
}

TEST_CASE("learning rate drops by the configured factor at the drop epoch") {
  const Manifest m = generate_synthetic_movie(toy_synth(27));
  BNetParams bnet = init_bnet_params(m.modalities, 2, 1, 3);
  SeqParams seq = init_seq_params(bnet.boundary_dim(), 2, 6, 4);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.lr_drop_epoch = 3;
  cfg.learning_rate = 0.01;
  const auto history = train_pipeline({m}, bnet, seq, cfg);
  CHECK(history[0].learning_rate == doctest::Approx(0.01));
  CHECK(history[1].learning_rate == doctest::Approx(0.01));
  CHECK(history[2].learning_rate == doctest::Approx(0.001));
  CHECK(history[3].learning_rate == doctest::Approx(0.001));
}

TEST_CASE("training without labels is rejected") {
  Manifest m = generate_synthetic_movie(toy_synth(28));
  m.gt.reset();
  BNetParams bnet = init_bnet_params(m.modalities, 2, 1, 3);
  SeqParams seq = init_seq_params(bnet.boundary_dim(), 2, 6, 4);
  CHECK_THROWS_AS(train_pipeline({m}, bnet, seq, TrainConfig{}), ValidationError);
}
