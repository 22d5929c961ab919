#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lgss/sequence.hpp"

using namespace lgss;

namespace {

Eigen::MatrixXd random_reps(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = gauss(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("window starts: stride w/2 with right-aligned tail") {
  CHECK(window_starts(10, 10) == std::vector<int>{0});
  CHECK(window_starts(15, 10) == std::vector<int>{0, 5});
  CHECK(window_starts(11, 10) == std::vector<int>{0, 1});
  CHECK(window_starts(3, 10) == std::vector<int>{0});
  CHECK(window_starts(24, 10) == std::vector<int>{0, 5, 10, 14});
}

TEST_CASE("single window: coarse scores equal the window scores") {
  const int w = 10;
  const SeqParams p = init_seq_params(6, 4, w, 1);
  const Eigen::MatrixXd reps = random_reps(w, 6, 2);
  const Eigen::VectorXd whole = coarse_scores(reps, p);
  const Eigen::VectorXd single = score_window(reps, p);
  CHECK((whole - single).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("two overlapping windows: middle positions are averaged") {
  const int w = 10;
  const SeqParams p = init_seq_params(6, 4, w, 3);
  const Eigen::MatrixXd reps = random_reps(3 * w / 2, 6, 4);
  const Eigen::VectorXd merged = coarse_scores(reps, p);
  const Eigen::VectorXd win1 = score_window(reps.topRows(w), p);
  const Eigen::VectorXd win2 = score_window(reps.bottomRows(w), p);
  for (int i = 0; i < w / 2; ++i) {
    CHECK(merged(i) == doctest::Approx(win1(i)));
  }
  for (int i = w / 2; i < w; ++i) {
    CHECK(merged(i) == doctest::Approx(0.5 * (win1(i) + win2(i - w / 2))));
  }
  for (int i = w; i < 3 * w / 2; ++i) {
    CHECK(merged(i) == doctest::Approx(win2(i - w / 2)));
  }
}

TEST_CASE("zeroed output head gives p = 0.5 everywhere") {
  SeqParams p = init_seq_params(5, 3, 10, 6);
  p.tensor("head.w").setZero();
  p.tensor("head.b").setZero();
  const Eigen::VectorXd probs = coarse_scores(random_reps(23, 5, 7), p);
  for (int i = 0; i < probs.size(); ++i) CHECK(probs(i) == doctest::Approx(0.5));
}

TEST_CASE("probabilities stay in [0,1] for any length") {
  const SeqParams p = init_seq_params(4, 5, 10, 8);
  for (int len : {1, 2, 9, 10, 11, 37}) {
    const Eigen::VectorXd probs = coarse_scores(random_reps(len, 4, len), p);
    CHECK(probs.size() == len);
    CHECK(probs.minCoeff() >= 0.0);
    CHECK(probs.maxCoeff() <= 1.0);
  }
}

TEST_CASE("binarize follows the strict threshold rule") {
  Eigen::VectorXd p(2);
  p << 0.6, 0.3;
  CHECK(binarize(p, 0.5) == std::vector<std::uint8_t>{1, 0});

  Eigen::VectorXd q(1);
  q << 0.5;
  CHECK(binarize(q, 0.5) == std::vector<std::uint8_t>{0});  // p == tau stays 0

  Eigen::VectorXd r(3);
  r << 0.0, 0.2, 1.0;
  CHECK(binarize(r, 0.0) == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("binarize is monotone in tau") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd p(50);
  for (int i = 0; i < p.size(); ++i) p(i) = unit(rng);
  for (int trial = 0; trial < 20; ++trial) {
    const double lo = unit(rng);
    const double hi = std::min(1.0, lo + unit(rng));
    const auto at_lo = binarize(p, lo);
    const auto at_hi = binarize(p, hi);
    for (size_t i = 0; i < at_lo.size(); ++i) {
      CHECK(at_hi[i] <= at_lo[i]);  // raising tau never adds positives
    }
  }
}

TEST_CASE("weighted cross entropy matches hand arithmetic") {
  Eigen::VectorXd p(1);
  p << 0.5;
  CHECK(weighted_ce_loss(p, {1}, 1.0, 9.0) == doctest::Approx(9.0 * std::log(2.0)));
  CHECK(weighted_ce_loss(p, {0}, 1.0, 9.0) == doctest::Approx(std::log(2.0)));

  Eigen::VectorXd exact(2);
  exact << 1.0, 0.0;
  CHECK(weighted_ce_loss(exact, {1, 0}, 1.0, 9.0) <= 9.0 * std::log(1.0 / (1.0 - 1e-7)) + 1e-12);
}

TEST_CASE("unit class weights reduce to plain cross entropy") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  Eigen::VectorXd p(20);
  std::vector<std::uint8_t> y(20);
  for (int i = 0; i < 20; ++i) {
    p(i) = unit(rng);
    y[static_cast<size_t>(i)] = i % 3 == 0 ? 1 : 0;
  }
  double plain = 0.0;
  for (int i = 0; i < 20; ++i) {
    plain += y[static_cast<size_t>(i)] ? -std::log(p(i)) : -std::log(1.0 - p(i));
  }
  plain /= 20.0;
  CHECK(weighted_ce_loss(p, y, 1.0, 1.0) == doctest::Approx(plain));
  CHECK(weighted_ce_loss(p, y, 1.0, 9.0) >= 0.0);
}

TEST_CASE("loss rejects length mismatch, window must be even") {
  Eigen::VectorXd p(2);
  p << 0.5, 0.5;
  CHECK_THROWS_AS(weighted_ce_loss(p, {1}, 1.0, 9.0), ValidationError);
  CHECK_THROWS_AS(init_seq_params(4, 4, 7, 0), ValidationError);
}
