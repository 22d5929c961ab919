#include "lgss/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace lgss {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double alpha_decay(int preceding_count, double beta) {
  return std::exp(-static_cast<double>(preceding_count) / beta);
}

void validate_j_range(const GroupingConfig& cfg) {
  if (cfg.j_min < 2 || cfg.j_max < cfg.j_min) {
    throw ValidationError("grouping: need 2 <= j_min <= j_max");
  }
  if (cfg.beta <= 0.0) throw ValidationError("grouping: beta must be positive");
}

// Scene span scores for every contiguous run of super shots. G[a][b] is the
// score of the scene {C_a..C_b}; computed once per span, extending the run one
// member at a time with the same term order as scene_score so the two routes
// agree exactly.
std::vector<std::vector<double>> span_scores(const SuperShotSet& set, double beta,
                                             bool preceding_only) {
  const int m = set.size();
  const Eigen::MatrixXd& cos = set.cosine();
  std::vector<std::vector<double>> g(static_cast<size_t>(m),
                                     std::vector<double>(static_cast<size_t>(m), 0.0));
  if (preceding_only) {
    for (int a = 0; a < m; ++a) {
      double acc = 0.0;
      for (int b = a + 1; b < m; ++b) {
        double sum = 0.0;
        double mx = -std::numeric_limits<double>::infinity();
        for (int t = a; t < b; ++t) {
          const double c = cos(b, t);
          sum += c;
          mx = std::max(mx, c);
        }
        const int count = b - a;
        acc += alpha_decay(count, beta) * (sum / count + logistic(mx));
        g[static_cast<size_t>(a)][static_cast<size_t>(b)] = acc;
      }
    }
  } else {
    // symmetric reading: each member scores against all other members. For a
    // fixed left end, each member's running cosine sum/max against the rest
    // of the span grows one column at a time, in the same ascending order
    // scene_score uses.
    std::vector<double> sum(static_cast<size_t>(m));
    std::vector<double> mx(static_cast<size_t>(m));
    for (int a = 0; a < m; ++a) {
      sum[static_cast<size_t>(a)] = 0.0;
      mx[static_cast<size_t>(a)] = -std::numeric_limits<double>::infinity();
      for (int b = a + 1; b < m; ++b) {
        for (int l = a; l < b; ++l) {
          const double c = cos(l, b);
          sum[static_cast<size_t>(l)] += c;
          mx[static_cast<size_t>(l)] = std::max(mx[static_cast<size_t>(l)], c);
        }
        double s_new = 0.0;
        double m_new = -std::numeric_limits<double>::infinity();
        for (int t = a; t < b; ++t) {
          const double c = cos(b, t);
          s_new += c;
          m_new = std::max(m_new, c);
        }
        sum[static_cast<size_t>(b)] = s_new;
        mx[static_cast<size_t>(b)] = m_new;

        const int others = b - a;
        const double alpha = alpha_decay(others, beta);
        double total = 0.0;
        for (int l = a; l <= b; ++l) {
          total += alpha * (sum[static_cast<size_t>(l)] / others +
                            logistic(mx[static_cast<size_t>(l)]));
        }
        g[static_cast<size_t>(a)][static_cast<size_t>(b)] = total;
      }
    }
  }
  return g;
}

// Prefer the partition the DP's tie-breaking yields: smaller last cut first,
// then smaller second-to-last cut, and so on.
bool reversed_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  for (size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

std::vector<std::pair<int, int>> scenes_from_cuts(const std::vector<int>& cuts, int m) {
  std::vector<std::pair<int, int>> scenes;
  int lo = 0;
  for (int c : cuts) {
    scenes.emplace_back(lo, c - 1);
    lo = c;
  }
  scenes.emplace_back(lo, m - 1);
  return scenes;
}

}  // namespace

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-300 || nb < 1e-300) return 0.0;
  return a.dot(b) / (na * nb);
}

SuperShotSet::SuperShotSet(Eigen::MatrixXd shot_features) : feats_(std::move(shot_features)) {}

void SuperShotSet::reset_ranges(const std::vector<std::pair<int, int>>& ranges) {
  const int n = shot_count();
  if (ranges.empty() || ranges.front().first != 0 || ranges.back().second != n - 1) {
    throw ValidationError("super shots must cover all shots");
  }
  shots_.clear();
  int expect = 0;
  for (const auto& [lo, hi] : ranges) {
    if (lo != expect || hi < lo) throw ValidationError("super shot ranges must be contiguous");
    SuperShot s;
    s.lo = lo;
    s.hi = hi;
    s.weights = Eigen::VectorXd::Constant(hi - lo + 1, 1.0 / static_cast<double>(hi - lo + 1));
    shots_.push_back(std::move(s));
    expect = hi + 1;
  }
  refresh();
}

Eigen::MatrixXd SuperShotSet::member_features(int k) const {
  const SuperShot& s = shots_[static_cast<size_t>(k)];
  return feats_.middleRows(s.lo, s.length());
}

void SuperShotSet::refresh() {
  const int m = size();
  for (SuperShot& s : shots_) {
    s.rep = feats_.middleRows(s.lo, s.length()).transpose() * s.weights;
  }
  cos_.resize(m, m);
  for (int i = 0; i < m; ++i) {
    cos_(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      const double c =
          cosine_similarity(shots_[static_cast<size_t>(i)].rep, shots_[static_cast<size_t>(j)].rep);
      cos_(i, j) = c;
      cos_(j, i) = c;
    }
  }
}

std::vector<int> SuperShotSet::boundaries() const {
  std::vector<int> out;
  for (size_t k = 0; k + 1 < shots_.size(); ++k) out.push_back(shots_[k].hi + 1);
  return out;
}

Eigen::MatrixXd grouping_features(const Manifest& m) {
  int total = 0;
  for (const auto& [name, dim] : m.modalities) total += dim;
  Eigen::MatrixXd feats(m.shot_count(), total);
  for (int s = 0; s < m.shot_count(); ++s) {
    int off = 0;
    for (size_t mi = 0; mi < m.modalities.size(); ++mi) {
      const int dim = m.modalities[mi].second;
      Eigen::VectorXd v(dim);
      const auto& raw = m.shots[static_cast<size_t>(s)].features[mi];
      for (int d = 0; d < dim; ++d) v(d) = static_cast<double>(raw[static_cast<size_t>(d)]);
      const double norm = v.norm();
      if (norm > 1e-300) v /= norm;
      feats.row(s).segment(off, dim) = v.transpose();
      off += dim;
    }
  }
  return feats;
}

SuperShotSet initial_super_shots(Eigen::MatrixXd shot_features, const Eigen::VectorXd& p,
                                 int init_count) {
  const int n = static_cast<int>(shot_features.rows());
  if (p.size() != n - 1) throw ValidationError("initial_super_shots: p must have n-1 entries");
  if (init_count < 1) throw ValidationError("initial_super_shots: init_count must be >= 1");

  std::vector<int> cuts;
  if (n <= init_count) {
    for (int b = 1; b <= n - 1; ++b) cuts.push_back(b);
  } else {
    std::vector<int> order(static_cast<size_t>(n - 1));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (p(a) != p(b)) return p(a) > p(b);
      return a < b;
    });
    order.resize(static_cast<size_t>(init_count - 1));
    for (int k : order) cuts.push_back(k + 1);  // boundary index = position + 1
    std::sort(cuts.begin(), cuts.end());
  }

  std::vector<std::pair<int, int>> ranges;
  int lo = 0;
  for (int c : cuts) {
    ranges.emplace_back(lo, c - 1);
    lo = c;
  }
  ranges.emplace_back(lo, n - 1);

  SuperShotSet set(std::move(shot_features));
  set.reset_ranges(ranges);
  return set;
}

SuperShotSet initial_super_shots(const Manifest& m, const Eigen::VectorXd& p, int init_count) {
  return initial_super_shots(grouping_features(m), p, init_count);
}

double fs_score(const SuperShot& ck, const std::vector<SuperShot>& preceding) {
  if (preceding.empty()) return 0.0;
  double sum = 0.0;
  for (const SuperShot& other : preceding) sum += cosine_similarity(ck.rep, other.rep);
  return sum / static_cast<double>(preceding.size());
}

double ft_score(const SuperShot& ck, const std::vector<SuperShot>& preceding) {
  if (preceding.empty()) return 0.0;
  double mx = -std::numeric_limits<double>::infinity();
  for (const SuperShot& other : preceding) {
    mx = std::max(mx, cosine_similarity(ck.rep, other.rep));
  }
  return logistic(mx);
}

double scene_score(const std::vector<SuperShot>& phi, double beta, bool preceding_only) {
  const int m = static_cast<int>(phi.size());
  if (m <= 1) return 0.0;
  double g = 0.0;
  if (preceding_only) {
    for (int l = 1; l < m; ++l) {
      double sum = 0.0;
      double mx = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < l; ++t) {
        const double c = cosine_similarity(phi[static_cast<size_t>(l)].rep,
                                           phi[static_cast<size_t>(t)].rep);
        sum += c;
        mx = std::max(mx, c);
      }
      g += alpha_decay(l, beta) * (sum / l + logistic(mx));
    }
  } else {
    const double alpha = alpha_decay(m - 1, beta);
    for (int l = 0; l < m; ++l) {
      double sum = 0.0;
      double mx = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < m; ++t) {
        if (t == l) continue;
        const double c = cosine_similarity(phi[static_cast<size_t>(l)].rep,
                                           phi[static_cast<size_t>(t)].rep);
        sum += c;
        mx = std::max(mx, c);
      }
      g += alpha * (sum / (m - 1) + logistic(mx));
    }
  }
  return g;
}

ScenePartition dp_optimal_partition(const SuperShotSet& set, const GroupingConfig& cfg) {
  validate_j_range(cfg);
  const int m = set.size();
  if (m <= cfg.j_min) throw ValidationError("too few super shots");
  const int j_cap = std::min(cfg.j_max, m - 1);

  const auto g = span_scores(set, cfg.beta, cfg.preceding_only);

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // f[j][e]: best score partitioning super shots [0, e] into j scenes
  std::vector<std::vector<double>> f(static_cast<size_t>(j_cap + 1),
                                     std::vector<double>(static_cast<size_t>(m), kNegInf));
  std::vector<std::vector<int>> arg(static_cast<size_t>(j_cap + 1),
                                    std::vector<int>(static_cast<size_t>(m), -1));
  for (int e = 0; e < m; ++e) f[1][static_cast<size_t>(e)] = g[0][static_cast<size_t>(e)];

  for (int j = 2; j <= j_cap; ++j) {
    for (int e = j - 1; e < m; ++e) {
      double best = kNegInf;
      int best_k = -1;
      for (int k = j - 2; k <= e - 1; ++k) {
        const double cand =
            f[static_cast<size_t>(j - 1)][static_cast<size_t>(k)] +
            g[static_cast<size_t>(k + 1)][static_cast<size_t>(e)];
        if (cand > best) {
          best = cand;
          best_k = k;
        }
      }
      f[static_cast<size_t>(j)][static_cast<size_t>(e)] = best;
      arg[static_cast<size_t>(j)][static_cast<size_t>(e)] = best_k;
    }
  }

  double best_score = kNegInf;
  int best_j = -1;
  for (int j = cfg.j_min; j <= j_cap; ++j) {
    const double score = f[static_cast<size_t>(j)][static_cast<size_t>(m - 1)];
    if (score > best_score) {
      best_score = score;
      best_j = j;
    }
  }

  ScenePartition out;
  out.score = best_score;
  int e = m - 1;
  for (int j = best_j; j >= 2; --j) {
    const int k = arg[static_cast<size_t>(j)][static_cast<size_t>(e)];
    out.scenes.emplace_back(k + 1, e);
    e = k;
  }
  out.scenes.emplace_back(0, e);
  std::reverse(out.scenes.begin(), out.scenes.end());
  return out;
}

ScenePartition brute_force_oracle(const SuperShotSet& set, const GroupingConfig& cfg) {
  validate_j_range(cfg);
  const int m = set.size();
  if (m > 12) throw ValidationError("brute_force_oracle: set too large (|C| > 12)");
  if (m <= cfg.j_min) throw ValidationError("too few super shots");
  const int j_cap = std::min(cfg.j_max, m - 1);

  std::vector<SuperShot> scene_members;
  const auto score_of = [&](const std::vector<int>& cuts) {
    double total = 0.0;
    for (const auto& [lo, hi] : scenes_from_cuts(cuts, m)) {
      scene_members.clear();
      for (int k = lo; k <= hi; ++k) scene_members.push_back(set.at(k));
      total += scene_score(scene_members, cfg.beta, cfg.preceding_only);
    }
    return total;
  };

  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> best_cuts;
  bool have_best = false;

  for (int j = cfg.j_min; j <= j_cap; ++j) {
    // all increasing cut vectors of length j-1 drawn from [1, m-1]
    std::vector<int> cuts(static_cast<size_t>(j - 1));
    std::iota(cuts.begin(), cuts.end(), 1);
    while (true) {
      const double score = score_of(cuts);
      if (!have_best || score > best_score ||
          (score == best_score && cuts.size() == best_cuts.size() &&
           reversed_lex_less(cuts, best_cuts))) {
        best_score = score;
        best_cuts = cuts;
        have_best = true;
      }
      // next combination
      int i = static_cast<int>(cuts.size()) - 1;
      while (i >= 0 && cuts[static_cast<size_t>(i)] == m - 1 - (static_cast<int>(cuts.size()) - 1 - i)) {
        --i;
      }
      if (i < 0) break;
      ++cuts[static_cast<size_t>(i)];
      for (size_t k = static_cast<size_t>(i) + 1; k < cuts.size(); ++k) {
        cuts[k] = cuts[k - 1] + 1;
      }
    }
  }

  ScenePartition out;
  out.score = best_score;
  out.scenes = scenes_from_cuts(best_cuts, m);
  return out;
}

double partition_objective(const SuperShotSet& set, const ScenePartition& partition, double beta,
                           bool preceding_only) {
  double total = 0.0;
  std::vector<SuperShot> members;
  for (const auto& [lo, hi] : partition.scenes) {
    members.clear();
    for (int k = lo; k <= hi; ++k) members.push_back(set.at(k));
    total += scene_score(members, beta, preceding_only);
  }
  return total;
}

std::vector<Eigen::VectorXd> refine_gradient(const SuperShotSet& set,
                                             const ScenePartition& partition, double beta,
                                             bool preceding_only) {
  const int m = set.size();
  const int dim = static_cast<int>(set.shot_features().cols());
  std::vector<Eigen::VectorXd> d_rep(static_cast<size_t>(m), Eigen::VectorXd::Zero(dim));
  std::vector<double> norms(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) norms[static_cast<size_t>(k)] = set.at(k).rep.norm();

  // accumulate w * d cos(C_x, C_y) into both endpoints' representation grads
  const auto add_cos_grad = [&](int x, int y, double w) {
    const double nx = norms[static_cast<size_t>(x)];
    const double ny = norms[static_cast<size_t>(y)];
    if (nx < 1e-300 || ny < 1e-300) return;
    const double c = set.cosine()(x, y);
    const Eigen::VectorXd& rx = set.at(x).rep;
    const Eigen::VectorXd& ry = set.at(y).rep;
    d_rep[static_cast<size_t>(x)] += w * (ry / (nx * ny) - c * rx / (nx * nx));
    d_rep[static_cast<size_t>(y)] += w * (rx / (nx * ny) - c * ry / (ny * ny));
  };

  for (const auto& [lo, hi] : partition.scenes) {
    if (preceding_only) {
      for (int l = lo + 1; l <= hi; ++l) {
        const int count = l - lo;
        const double alpha = alpha_decay(count, beta);
        int arg = lo;
        for (int t = lo; t < l; ++t) {
          add_cos_grad(l, t, alpha / count);
          if (set.cosine()(l, t) > set.cosine()(l, arg)) arg = t;
        }
        const double s = logistic(set.cosine()(l, arg));
        add_cos_grad(l, arg, alpha * s * (1.0 - s));
      }
    } else {
      const int others = hi - lo;
      if (others < 1) continue;
      const double alpha = alpha_decay(others, beta);
      for (int l = lo; l <= hi; ++l) {
        int arg = -1;
        for (int t = lo; t <= hi; ++t) {
          if (t == l) continue;
          add_cos_grad(l, t, alpha / others);
          if (arg < 0 || set.cosine()(l, t) > set.cosine()(l, arg)) arg = t;
        }
        const double s = logistic(set.cosine()(l, arg));
        add_cos_grad(l, arg, alpha * s * (1.0 - s));
      }
    }
  }

  std::vector<Eigen::VectorXd> grads(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    grads[static_cast<size_t>(k)] = set.member_features(k) * d_rep[static_cast<size_t>(k)];
    if (!grads[static_cast<size_t>(k)].allFinite()) {
      throw ValidationError("refine_weights: non-finite gradient for super shot " +
                            std::to_string(k));
    }
  }
  return grads;
}

void refine_weights(SuperShotSet& set, const ScenePartition& partition, int steps,
                    double step_size, double beta, bool preceding_only) {
  for (int s = 0; s < steps; ++s) {
    const auto grads = refine_gradient(set, partition, beta, preceding_only);
    for (int k = 0; k < set.size(); ++k) {
      Eigen::VectorXd w = set.at(k).weights + step_size * grads[static_cast<size_t>(k)];
      w = w.cwiseMax(0.0);
      const double sum = w.sum();
      if (sum <= 0.0) {
        w.setConstant(1.0 / static_cast<double>(w.size()));
      } else {
        w /= sum;
      }
      set.at(k).weights = std::move(w);
    }
    set.refresh();
  }
}

GroupingResult optimal_grouping(const Manifest& m, const Eigen::VectorXd& p,
                                const GroupingConfig& cfg, const GroupingSink& sink) {
  validate_j_range(cfg);
  if (cfg.init_count < 1 || cfg.k_set < 1 || cfg.k_para < 1) {
    throw ValidationError("grouping: init_count, k_set, k_para must be >= 1");
  }

  SuperShotSet set = initial_super_shots(m, p, cfg.init_count);
  if (sink) sink(0, set);

  GroupingResult result;
  std::vector<int> prev_bounds = set.boundaries();
  int j_lo = cfg.j_min;
  int j_hi = cfg.j_max;
  bool frozen = false;

  for (int outer = 1; outer <= cfg.k_set; ++outer) {
    result.outer_iterations = outer;
    if (set.size() <= j_lo) {
      // no repartition possible: the current set is its own optimal grouping
      result.reached_fixpoint = true;
      break;
    }

    GroupingConfig round = cfg;
    round.j_min = j_lo;
    round.j_max = j_hi;

    ScenePartition part;
    bool have_part = false;
    double last_delta = std::numeric_limits<double>::infinity();
    for (int q = 0; q < cfg.k_para; ++q) {
      ScenePartition next = dp_optimal_partition(set, round);
      if (have_part && next == part && last_delta < 1e-14) {
        break;  // weights stationary and partition stable: inner loop converged
      }
      part = std::move(next);
      have_part = true;

      std::vector<Eigen::VectorXd> before(static_cast<size_t>(set.size()));
      for (int k = 0; k < set.size(); ++k) before[static_cast<size_t>(k)] = set.at(k).weights;
      refine_weights(set, part, 1, cfg.refine_step, cfg.beta, cfg.preceding_only);
      last_delta = 0.0;
      for (int k = 0; k < set.size(); ++k) {
        last_delta = std::max(
            last_delta, (set.at(k).weights - before[static_cast<size_t>(k)]).cwiseAbs().maxCoeff());
      }
    }

    result.trace.push_back({outer, set.size(), part.scene_count(), part.score});

    std::vector<std::pair<int, int>> ranges;
    for (const auto& [lo, hi] : part.scenes) {
      ranges.emplace_back(set.at(lo).lo, set.at(hi).hi);
    }
    set.reset_ranges(ranges);
    if (sink) sink(outer, set);

    if (!cfg.research_scene_count && !frozen) {
      j_lo = part.scene_count();
      j_hi = part.scene_count();
      frozen = true;
    }

    const std::vector<int> bounds = set.boundaries();
    if (bounds == prev_bounds) {
      result.reached_fixpoint = true;
      break;
    }
    prev_bounds = bounds;
  }

  result.bits.assign(static_cast<size_t>(m.boundary_count()), 0);
  for (int b : prev_bounds) result.bits[static_cast<size_t>(b - 1)] = 1;
  return result;
}

void dump_correlation(const SuperShotSet& set, const std::filesystem::path& path) {
  std::ostringstream os;
  os << std::setprecision(17);
  const Eigen::MatrixXd& cos = set.cosine();
  for (int i = 0; i < set.size(); ++i) {
    for (int j = 0; j < set.size(); ++j) {
      if (j) os << ",";
      os << cos(i, j);
    }
    os << "\n";
  }
  atomic_write_file(path, os.str());
}

void write_trace_csv(const std::vector<GroupingTraceRow>& trace,
                     const std::filesystem::path& path) {
  std::ostringstream os;
  os << "iteration,super_shots,scene_count,score\n";
  os << std::setprecision(17);
  for (const GroupingTraceRow& row : trace) {
    os << row.iteration << "," << row.super_shots << "," << row.scene_count << "," << row.score
       << "\n";
  }
  atomic_write_file(path, os.str());
}

}  // namespace lgss
