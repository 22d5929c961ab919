#include "lgss/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace lgss {

namespace {

constexpr double kProbEps = 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct DirectionTensors {
  Eigen::Map<const Eigen::MatrixXd> wx, wh, b;
};

DirectionTensors direction(const SeqParams& p, const std::string& prefix) {
  return {p.tensor(prefix + ".wx"), p.tensor(prefix + ".wh"), p.tensor(prefix + ".b")};
}

// Forward one direction over the rows of x (already in processing order).
void lstm_forward(const Eigen::MatrixXd& x, const DirectionTensors& dir, int hidden,
                  LstmDirectionCache& cache) {
  const int steps = static_cast<int>(x.rows());
  cache.x = x;
  cache.i.resize(hidden, steps);
  cache.f.resize(hidden, steps);
  cache.g.resize(hidden, steps);
  cache.o.resize(hidden, steps);
  cache.c.resize(hidden, steps);
  cache.h.resize(hidden, steps);

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(hidden);
  for (int t = 0; t < steps; ++t) {
    const Eigen::VectorXd a =
        dir.wx * x.row(t).transpose() + dir.wh * h_prev + dir.b.col(0);
    for (int r = 0; r < hidden; ++r) {
      cache.i(r, t) = sigmoid(a(r));
      cache.f(r, t) = sigmoid(a(hidden + r));
      cache.g(r, t) = std::tanh(a(2 * hidden + r));
      cache.o(r, t) = sigmoid(a(3 * hidden + r));
    }
    cache.c.col(t) = cache.f.col(t).cwiseProduct(c_prev) + cache.i.col(t).cwiseProduct(cache.g.col(t));
    cache.h.col(t) = cache.o.col(t).cwiseProduct(cache.c.col(t).array().tanh().matrix());
    h_prev = cache.h.col(t);
    c_prev = cache.c.col(t);
  }
}

// Backprop one direction. d_h_ext holds dL/dh per step (columns in processing
// order); returns dL/dx rows and accumulates weight gradients.
Eigen::MatrixXd lstm_backward(const LstmDirectionCache& cache, const DirectionTensors& dir,
                              int hidden, const Eigen::MatrixXd& d_h_ext,
                              Eigen::Map<Eigen::MatrixXd> g_wx, Eigen::Map<Eigen::MatrixXd> g_wh,
                              Eigen::Map<Eigen::MatrixXd> g_b) {
  const int steps = static_cast<int>(cache.x.rows());
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(steps, cache.x.cols());
  Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(hidden);

  for (int t = steps - 1; t >= 0; --t) {
    const Eigen::VectorXd dh = d_h_ext.col(t) + dh_carry;
    const Eigen::VectorXd tanh_c = cache.c.col(t).array().tanh().matrix();
    const Eigen::VectorXd d_o = dh.cwiseProduct(tanh_c);
    const Eigen::VectorXd dc =
        dc_carry + dh.cwiseProduct(cache.o.col(t))
                       .cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    const Eigen::VectorXd c_prev =
        t > 0 ? Eigen::VectorXd(cache.c.col(t - 1)) : Eigen::VectorXd::Zero(hidden);
    const Eigen::VectorXd h_prev =
        t > 0 ? Eigen::VectorXd(cache.h.col(t - 1)) : Eigen::VectorXd::Zero(hidden);

    const Eigen::VectorXd d_i = dc.cwiseProduct(cache.g.col(t));
    const Eigen::VectorXd d_f = dc.cwiseProduct(c_prev);
    const Eigen::VectorXd d_g = dc.cwiseProduct(cache.i.col(t));
    dc_carry = dc.cwiseProduct(cache.f.col(t));

    Eigen::VectorXd da(4 * hidden);
    for (int r = 0; r < hidden; ++r) {
      const double iv = cache.i(r, t), fv = cache.f(r, t), gv = cache.g(r, t), ov = cache.o(r, t);
      da(r) = d_i(r) * iv * (1.0 - iv);
      da(hidden + r) = d_f(r) * fv * (1.0 - fv);
      da(2 * hidden + r) = d_g(r) * (1.0 - gv * gv);
      da(3 * hidden + r) = d_o(r) * ov * (1.0 - ov);
    }

    g_wx += da * cache.x.row(t);
    g_wh += da * h_prev.transpose();
    g_b.col(0) += da;
    dx.row(t) = (dir.wx.transpose() * da).transpose();
    dh_carry = dir.wh.transpose() * da;
  }
  return dx;
}

}  // namespace

Eigen::Map<const Eigen::MatrixXd> SeqParams::tensor(const std::string& name) const {
  const int idx = layout.find(name);
  if (idx < 0) throw ValidationError("seq tensor not found: " + name);
  return tensor_view(values, layout.spec(idx));
}

Eigen::Map<Eigen::MatrixXd> SeqParams::tensor(const std::string& name) {
  const int idx = layout.find(name);
  if (idx < 0) throw ValidationError("seq tensor not found: " + name);
  return tensor_view(values, layout.spec(idx));
}

SeqParams init_seq_params(int input_dim, int hidden, int window, std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1) throw ValidationError("seq: dims must be >= 1");
  if (window < 2 || window % 2 != 0) throw ValidationError("seq: window must be even and >= 2");

  SeqParams p;
  p.config = {window, hidden};
  p.input_dim = input_dim;
  for (const std::string prefix : {"fwd", "bwd"}) {
    p.layout.add(prefix + ".wx", 4 * hidden, input_dim);
    p.layout.add(prefix + ".wh", 4 * hidden, hidden);
    p.layout.add(prefix + ".b", 4 * hidden, 1);
  }
  p.layout.add("head.w", 1, 2 * hidden);
  p.layout.add("head.b", 1, 1);
  p.values = Eigen::VectorXd::Zero(p.layout.total());

  std::mt19937_64 rng(seed);
  for (const TensorSpec& s : p.layout.specs()) {
    auto view = tensor_view(p.values, s);
    if (s.name.ends_with(".b")) {
      if (s.name != "head.b") {
        // forget-gate bias starts at 1 so early gradients flow through time
        view.block(hidden, 0, hidden, 1).setOnes();
      }
      continue;
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.cols));
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (int c = 0; c < s.cols; ++c) {
      for (int r = 0; r < s.rows; ++r) view(r, c) = dist(rng);
    }
  }
  return p;
}

std::vector<int> window_starts(int length, int window) {
  if (length < 1) return {};
  if (length <= window) return {0};
  const int stride = std::max(1, window / 2);
  std::vector<int> starts;
  for (int s = 0; s + window <= length; s += stride) starts.push_back(s);
  if (starts.back() + window < length) starts.push_back(length - window);
  return starts;
}

Eigen::VectorXd score_window(const Eigen::MatrixXd& reps, const SeqParams& params,
                             SeqCache* cache) {
  if (reps.cols() != params.input_dim) {
    throw ValidationError("seq: representation dim " + std::to_string(reps.cols()) +
                          " does not match params input dim " + std::to_string(params.input_dim));
  }
  const int steps = static_cast<int>(reps.rows());
  const int hidden = params.config.hidden;

  SeqCache local;
  SeqCache& c = cache ? *cache : local;
  lstm_forward(reps, direction(params, "fwd"), hidden, c.fwd);
  // backward direction consumes the rows in reverse order
  lstm_forward(reps.colwise().reverse().eval(), direction(params, "bwd"), hidden, c.bwd);

  const auto head_w = params.tensor("head.w");
  const double head_b = params.tensor("head.b")(0, 0);
  c.logits.resize(steps);
  c.probs.resize(steps);
  for (int t = 0; t < steps; ++t) {
    double logit = head_b;
    logit += head_w.row(0).segment(0, hidden).dot(c.fwd.h.col(t));
    logit += head_w.row(0).segment(hidden, hidden).dot(c.bwd.h.col(steps - 1 - t));
    c.logits(t) = logit;
    c.probs(t) = sigmoid(logit);
  }
  return c.probs;
}

Eigen::VectorXd coarse_scores(const Eigen::MatrixXd& reps, const SeqParams& params) {
  const int length = static_cast<int>(reps.rows());
  if (length < 1) throw ValidationError("seq: need at least one boundary");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(length);
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(length);
  for (int s : window_starts(length, params.config.window)) {
    const int len = std::min(params.config.window, length - s);
    const Eigen::VectorXd probs = score_window(reps.middleRows(s, len), params);
    acc.segment(s, len) += probs;
    cnt.segment(s, len) += Eigen::VectorXd::Ones(len);
  }
  return acc.cwiseQuotient(cnt);
}

Eigen::VectorXd coarse_scores(const Manifest& m, const BNetParams& bnet, const SeqParams& params) {
  return coarse_scores(boundary_representations(m, bnet), params);
}

std::vector<std::uint8_t> binarize(const Eigen::VectorXd& p, double tau) {
  std::vector<std::uint8_t> out(static_cast<size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) out[static_cast<size_t>(i)] = p(i) > tau ? 1 : 0;
  return out;
}

double weighted_ce_loss(const Eigen::VectorXd& p, const std::vector<std::uint8_t>& y, double w0,
                        double w1) {
  if (p.size() != static_cast<Eigen::Index>(y.size())) {
    throw ValidationError("weighted_ce_loss: length mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p(i), kProbEps, 1.0 - kProbEps);
    sum += y[static_cast<size_t>(i)] ? -w1 * std::log(pi) : -w0 * std::log(1.0 - pi);
  }
  return sum / static_cast<double>(p.size());
}

std::vector<WindowRef> movie_windows(const Manifest& m, int window) {
  std::vector<WindowRef> refs;
  const int length = m.boundary_count();
  for (int s : window_starts(length, window)) {
    refs.push_back({&m, s, std::min(window, length - s)});
  }
  return refs;
}

double window_loss_and_grad(const WindowRef& ref, const BNetParams& bnet, const SeqParams& seq,
                            double w0, double w1, Eigen::VectorXd* bnet_grad,
                            Eigen::VectorXd* seq_grad) {
  const Manifest& m = *ref.movie;
  const int hidden = seq.config.hidden;
  const int len = ref.length;

  std::vector<BoundaryClip> clips;
  std::vector<BNetCache> caches(static_cast<size_t>(len));
  Eigen::MatrixXd reps(len, bnet.boundary_dim());
  clips.reserve(static_cast<size_t>(len));
  for (int t = 0; t < len; ++t) {
    const int boundary = ref.start + t + 1;  // 1-based boundary index
    clips.push_back(extract_clip(m, boundary, bnet.config.w_b));
    reps.row(t) = bnet_forward(clips.back(), bnet, &caches[static_cast<size_t>(t)]).transpose();
  }

  SeqCache cache;
  const Eigen::VectorXd probs = score_window(reps, seq, &cache);

  const auto bits = m.gt_bits();
  std::vector<std::uint8_t> y(bits.begin() + ref.start, bits.begin() + ref.start + len);
  const double loss = weighted_ce_loss(probs, y, w0, w1);
  if (!bnet_grad && !seq_grad) return loss;

  // dL/dlogit_t; the clamp in the loss only bites at |logit| > ~16 where the
  // closed form is numerically identical.
  Eigen::VectorXd d_logit(len);
  for (int t = 0; t < len; ++t) {
    const double pt = probs(t);
    d_logit(t) = (y[static_cast<size_t>(t)] ? -w1 * (1.0 - pt) : w0 * pt) / static_cast<double>(len);
  }

  Eigen::VectorXd seq_local = Eigen::VectorXd::Zero(seq.values.size());
  const auto seq_view = [&](const std::string& name) {
    return tensor_view(seq_local, seq.layout.spec(seq.layout.find(name)));
  };

  const auto head_w = seq.tensor("head.w");
  auto g_head_w = seq_view("head.w");
  auto g_head_b = seq_view("head.b");
  Eigen::MatrixXd dh_fwd = Eigen::MatrixXd::Zero(hidden, len);
  Eigen::MatrixXd dh_bwd = Eigen::MatrixXd::Zero(hidden, len);
  for (int t = 0; t < len; ++t) {
    g_head_w.row(0).segment(0, hidden) += d_logit(t) * cache.fwd.h.col(t).transpose();
    g_head_w.row(0).segment(hidden, hidden) +=
        d_logit(t) * cache.bwd.h.col(len - 1 - t).transpose();
    g_head_b(0, 0) += d_logit(t);
    dh_fwd.col(t) += d_logit(t) * head_w.row(0).segment(0, hidden).transpose();
    dh_bwd.col(len - 1 - t) += d_logit(t) * head_w.row(0).segment(hidden, hidden).transpose();
  }

  const Eigen::MatrixXd dx_fwd =
      lstm_backward(cache.fwd, direction(seq, "fwd"), hidden, dh_fwd, seq_view("fwd.wx"),
                    seq_view("fwd.wh"), seq_view("fwd.b"));
  const Eigen::MatrixXd dx_bwd =
      lstm_backward(cache.bwd, direction(seq, "bwd"), hidden, dh_bwd, seq_view("bwd.wx"),
                    seq_view("bwd.wh"), seq_view("bwd.b"));

  if (seq_grad) *seq_grad += seq_local;

  if (bnet_grad) {
    for (int t = 0; t < len; ++t) {
      const Eigen::VectorXd d_rep =
          dx_fwd.row(t).transpose() + dx_bwd.row(len - 1 - t).transpose();
      bnet_backward(clips[static_cast<size_t>(t)], bnet, caches[static_cast<size_t>(t)], d_rep,
                    *bnet_grad);
    }
  }
  return loss;
}

double batch_loss_and_grad(const std::vector<WindowRef>& batch, const BNetParams& bnet,
                           const SeqParams& seq, double w0, double w1,
                           Eigen::VectorXd* bnet_grad, Eigen::VectorXd* seq_grad) {
  if (bnet_grad) bnet_grad->setZero(bnet.values.size());
  if (seq_grad) seq_grad->setZero(seq.values.size());
  double loss = 0.0;
  for (const WindowRef& ref : batch) {
    loss += window_loss_and_grad(ref, bnet, seq, w0, w1, bnet_grad, seq_grad);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  if (bnet_grad) *bnet_grad *= scale;
  if (seq_grad) *seq_grad *= scale;
  return loss * scale;
}

Eigen::VectorXd fd_batch_gradient(const std::vector<WindowRef>& batch, BNetParams bnet,
                                  SeqParams seq, double w0, double w1, double eps) {
  const Eigen::Index nb = bnet.values.size();
  const Eigen::Index ns = seq.values.size();
  Eigen::VectorXd grad(nb + ns);
  const auto eval = [&]() {
    return batch_loss_and_grad(batch, bnet, seq, w0, w1, nullptr, nullptr);
  };
  for (Eigen::Index k = 0; k < nb + ns; ++k) {
    double& slot = k < nb ? bnet.values(k) : seq.values(k - nb);
    const double saved = slot;
    slot = saved + eps;
    const double up = eval();
    slot = saved - eps;
    const double down = eval();
    slot = saved;
    grad(k) = (up - down) / (2.0 * eps);
  }
  return grad;
}

double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double denom = std::max(1e-8, std::abs(a(k)) + std::abs(b(k)));
    worst = std::max(worst, std::abs(a(k) - b(k)) / denom);
  }
  return worst;
}

double gradient_check(const BNetParams& bnet, const SeqParams& seq,
                      const std::vector<WindowRef>& batch, double eps, double w0, double w1) {
  Eigen::VectorXd gb, gs;
  batch_loss_and_grad(batch, bnet, seq, w0, w1, &gb, &gs);
  Eigen::VectorXd analytic(gb.size() + gs.size());
  analytic << gb, gs;
  const Eigen::VectorXd fd = fd_batch_gradient(batch, bnet, seq, w0, w1, eps);
  return max_relative_error(analytic, fd);
}

std::vector<EpochStats> train_pipeline(const std::vector<Manifest>& corpus, BNetParams& bnet,
                                       SeqParams& seq, const TrainConfig& cfg) {
  if (corpus.empty()) throw ValidationError("train: empty corpus");
  std::vector<WindowRef> windows;
  for (const Manifest& m : corpus) {
    if (!m.gt) throw ValidationError("train: movie " + m.movie_id + " has no gt labels");
    const auto refs = movie_windows(m, seq.config.window);
    windows.insert(windows.end(), refs.begin(), refs.end());
  }
  if (windows.empty()) throw ValidationError("train: no usable windows");

  Eigen::VectorXd m_b = Eigen::VectorXd::Zero(bnet.values.size());
  Eigen::VectorXd v_b = Eigen::VectorXd::Zero(bnet.values.size());
  Eigen::VectorXd m_s = Eigen::VectorXd::Zero(seq.values.size());
  Eigen::VectorXd v_s = Eigen::VectorXd::Zero(seq.values.size());
  Eigen::VectorXd g_b(bnet.values.size()), g_s(seq.values.size());

  std::mt19937_64 rng(cfg.seed);
  std::vector<EpochStats> history;
  long step = 0;

  const auto adam_update = [&](Eigen::VectorXd& values, Eigen::VectorXd& m1, Eigen::VectorXd& v2,
                               const Eigen::VectorXd& g, double lr) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      m1(k) = cfg.adam_beta1 * m1(k) + (1.0 - cfg.adam_beta1) * g(k);
      v2(k) = cfg.adam_beta2 * v2(k) + (1.0 - cfg.adam_beta2) * g(k) * g(k);
      values(k) -= lr * (m1(k) / bc1) / (std::sqrt(v2(k) / bc2) + cfg.adam_eps);
    }
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = epoch >= cfg.lr_drop_epoch ? cfg.learning_rate / cfg.lr_drop_factor
                                                 : cfg.learning_rate;
    std::shuffle(windows.begin(), windows.end(), rng);
    double loss_sum = 0.0;
    for (const WindowRef& ref : windows) {
      g_b.setZero();
      g_s.setZero();
      const double loss = window_loss_and_grad(ref, bnet, seq, cfg.weight_negative,
                                               cfg.weight_positive, &g_b, &g_s);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "train: non-finite loss in movie " << ref.movie->movie_id << ", window at boundary "
           << ref.start + 1;
        throw ValidationError(os.str());
      }
      loss_sum += loss;

      const double norm = std::sqrt(g_b.squaredNorm() + g_s.squaredNorm());
      if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
        const double scale = cfg.clip_norm / norm;
        g_b *= scale;
        g_s *= scale;
      }
      ++step;
      adam_update(bnet.values, m_b, v_b, g_b, lr);
      adam_update(seq.values, m_s, v_s, g_s, lr);
    }
    history.push_back({epoch, loss_sum / static_cast<double>(windows.size()), lr});
  }
  return history;
}

void write_loss_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "epoch,mean_loss,step_size\n";
  for (const EpochStats& e : history) {
    os << e.epoch << "," << std::setprecision(17) << e.mean_loss << "," << e.learning_rate << "\n";
  }
  atomic_write_file(path, os.str());
}

}  // namespace lgss
