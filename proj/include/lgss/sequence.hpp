#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lgss/bnet.hpp"
#include "lgss/manifest.hpp"
#include "lgss/tensor_layout.hpp"

namespace lgss {

struct SeqConfig {
  int window = 10;  // w_t, boundary positions per window; must be even
  int hidden = 16;  // recurrent state size per direction
};

// Bidirectional gated recurrent model over boundary representations. Cell
// layout (frozen for reproducibility): LSTM with gate order [input, forget,
// candidate, output]; sigmoid gates, tanh candidate/state squashing; the
// output head maps [h_fwd_t || h_bwd_t] to one logit per boundary.
struct SeqParams {
  SeqConfig config;
  int input_dim = 0;
  TensorLayout layout;
  Eigen::VectorXd values;

  Eigen::Map<const Eigen::MatrixXd> tensor(const std::string& name) const;
  Eigen::Map<Eigen::MatrixXd> tensor(const std::string& name);
};

SeqParams init_seq_params(int input_dim, int hidden, int window, std::uint64_t seed);

// Window start offsets covering [0, length) with stride window/2; the final
// window is right-aligned so the tail is always covered.
std::vector<int> window_starts(int length, int window);

struct LstmDirectionCache {
  Eigen::MatrixXd x;                 // input rows kept for weight grads
  Eigen::MatrixXd i, f, g, o, c, h;  // per-step gate values and states
};

struct SeqCache {
  LstmDirectionCache fwd, bwd;
  Eigen::VectorXd logits;
  Eigen::VectorXd probs;
};

// Probabilities for one window of boundary representations (rows of b).
Eigen::VectorXd score_window(const Eigen::MatrixXd& reps, const SeqParams& params,
                             SeqCache* cache = nullptr);

// Full-movie coarse scores: windows at stride w_t/2, overlapping positions
// averaged. Output length = rows(reps), entries in [0, 1].
Eigen::VectorXd coarse_scores(const Eigen::MatrixXd& reps, const SeqParams& params);
Eigen::VectorXd coarse_scores(const Manifest& m, const BNetParams& bnet, const SeqParams& params);

// o_i = 1 iff p_i > tau (strict).
std::vector<std::uint8_t> binarize(const Eigen::VectorXd& p, double tau);

// Mean over i of -[w1*y*ln p + w0*(1-y)*ln(1-p)], p clamped to [eps, 1-eps].
double weighted_ce_loss(const Eigen::VectorXd& p, const std::vector<std::uint8_t>& y, double w0,
                        double w1);

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.01;
  int lr_drop_epoch = 15;  // 1-based; from this epoch on, lr /= lr_drop_factor
  double lr_drop_factor = 10.0;
  double weight_negative = 1.0;  // w0, non-transition
  double weight_positive = 9.0;  // w1, transition
  double clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double learning_rate = 0.0;
};

// One training unit: a window of boundary positions within one movie.
struct WindowRef {
  const Manifest* movie = nullptr;
  int start = 0;   // first boundary position (0-based into the p vector)
  int length = 0;  // number of boundary positions
};

std::vector<WindowRef> movie_windows(const Manifest& m, int window);

// Loss of one window plus parameter gradients (accumulated into bnet_grad and
// seq_grad when non-null).
double window_loss_and_grad(const WindowRef& ref, const BNetParams& bnet, const SeqParams& seq,
                            double w0, double w1, Eigen::VectorXd* bnet_grad,
                            Eigen::VectorXd* seq_grad);

// Mean window loss and mean gradients over a batch of windows.
double batch_loss_and_grad(const std::vector<WindowRef>& batch, const BNetParams& bnet,
                           const SeqParams& seq, double w0, double w1,
                           Eigen::VectorXd* bnet_grad, Eigen::VectorXd* seq_grad);

// Central finite differences of the batch loss over [bnet; seq] parameters.
Eigen::VectorXd fd_batch_gradient(const std::vector<WindowRef>& batch, BNetParams bnet,
                                  SeqParams seq, double w0, double w1, double eps);

// max over params of |a - b| / max(1e-8, |a| + |b|)
double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Analytic-vs-finite-difference check over every BNet and sequence parameter;
// returns the max relative error.
double gradient_check(const BNetParams& bnet, const SeqParams& seq,
                      const std::vector<WindowRef>& batch, double eps, double w0 = 1.0,
                      double w1 = 9.0);

// Joint training of BNet + sequence parameters. Deterministic in cfg.seed:
// window visit order is reshuffled per epoch by one seeded RNG, updates are
// serialized, summation order fixed. Throws on missing labels or non-finite
// loss (naming the offending window).
std::vector<EpochStats> train_pipeline(const std::vector<Manifest>& corpus, BNetParams& bnet,
                                       SeqParams& seq, const TrainConfig& cfg);

void write_loss_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path);

}  // namespace lgss
