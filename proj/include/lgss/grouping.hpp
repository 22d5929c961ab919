#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lgss/manifest.hpp"

namespace lgss {

struct GroupingConfig {
  int init_count = 600;
  int j_min = 50;
  int j_max = 400;
  // alpha(m) = exp(-m / beta); infinity makes alpha identically 1.
  double beta = std::numeric_limits<double>::infinity();
  int k_set = 5;    // outer iteration cap (merge rounds)
  int k_para = 10;  // inner iteration cap (DP + weight refinement)
  double refine_step = 0.05;
  // true: P_l is the members of the scene strictly before C_l (default);
  // false: the symmetric reading, P_l = all other members of the scene.
  bool preceding_only = true;
  // false (default): the scene count found by the first DP round is frozen
  // for later rounds, so the merge loop stops at a partition fixpoint.
  // true: re-search [j_min, j_max] every round, which forces at least one
  // merge per round until j_min super shots remain.
  bool research_scene_count = false;
};

// A contiguous run of shots with a simplex weight vector over its members.
// Representation = sum_j weights[j] * feature(lo + j).
struct SuperShot {
  int lo = 0;
  int hi = 0;  // inclusive
  Eigen::VectorXd weights;
  Eigen::VectorXd rep;

  int length() const { return hi - lo + 1; }
};

// Ordered super shots partitioning shots [0, n-1], plus the pairwise cosine
// cache over current representations.
class SuperShotSet {
 public:
  explicit SuperShotSet(Eigen::MatrixXd shot_features);

  // Ranges must partition [0, n-1] in order; weights become uniform.
  void reset_ranges(const std::vector<std::pair<int, int>>& ranges);

  int size() const { return static_cast<int>(shots_.size()); }
  int shot_count() const { return static_cast<int>(feats_.rows()); }
  const SuperShot& at(int k) const { return shots_[static_cast<size_t>(k)]; }
  SuperShot& at(int k) { return shots_[static_cast<size_t>(k)]; }
  const Eigen::MatrixXd& shot_features() const { return feats_; }
  const Eigen::MatrixXd& cosine() const { return cos_; }

  // Member shot features of super shot k, one row per member.
  Eigen::MatrixXd member_features(int k) const;

  // Recompute representations from weights and refresh the cosine cache.
  void refresh();

  // Internal boundaries (1-based shot boundary indices) between super shots.
  std::vector<int> boundaries() const;

 private:
  Eigen::MatrixXd feats_;
  std::vector<SuperShot> shots_;
  Eigen::MatrixXd cos_;
};

// cos(a, b), with zero vectors giving 0.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Grouping feature per shot: concatenation of per-modality L2-normalized
// feature vectors, one row per shot.
Eigen::MatrixXd grouping_features(const Manifest& m);

// Cut at the (init_count - 1) boundaries with the highest coarse scores (ties
// to the lower index); each run becomes a super shot with uniform weights.
// When n <= init_count every shot is its own super shot.
SuperShotSet initial_super_shots(Eigen::MatrixXd shot_features, const Eigen::VectorXd& p,
                                 int init_count);
SuperShotSet initial_super_shots(const Manifest& m, const Eigen::VectorXd& p, int init_count);

// Mean cosine between ck and the members of preceding.
double fs_score(const SuperShot& ck, const std::vector<SuperShot>& preceding);
// Logistic of the max cosine between ck and the members of preceding.
double ft_score(const SuperShot& ck, const std::vector<SuperShot>& preceding);

// g(phi): sum over members (in order) of alpha(|P|) * (F_s + F_t) against the
// member's preceding set; the first member contributes 0.
double scene_score(const std::vector<SuperShot>& phi, double beta, bool preceding_only = true);

struct ScenePartition {
  // Inclusive super-shot index ranges, in order, covering the whole set.
  std::vector<std::pair<int, int>> scenes;
  double score = 0.0;

  int scene_count() const { return static_cast<int>(scenes.size()); }
  bool operator==(const ScenePartition& other) const { return scenes == other.scenes; }
};

// Maximizes sum of scene scores over partitions into j scenes for each
// j in [j_min, min(j_max, |C|-1)], then over j. Ties in the transition argmax
// break toward the smaller split point, ties across j toward smaller j.
// Throws ValidationError("too few super shots") when |C| <= j_min.
ScenePartition dp_optimal_partition(const SuperShotSet& set, const GroupingConfig& cfg);

// Exhaustive reference with the identical contract; |C| must be <= 12.
ScenePartition brute_force_oracle(const SuperShotSet& set, const GroupingConfig& cfg);

// Sum of scene scores of a partition under the current weights.
double partition_objective(const SuperShotSet& set, const ScenePartition& partition, double beta,
                           bool preceding_only = true);

// Analytic d(objective)/d(weights), one gradient vector per super shot. The
// F_t max is treated as fixed at the current argmax.
std::vector<Eigen::VectorXd> refine_gradient(const SuperShotSet& set,
                                             const ScenePartition& partition, double beta,
                                             bool preceding_only = true);

// `steps` gradient-ascent updates of every weight vector on the partition
// objective; after each step weights are clipped at 0 and renormalized to the
// simplex, then representations and the cosine cache are refreshed.
void refine_weights(SuperShotSet& set, const ScenePartition& partition, int steps,
                    double step_size, double beta, bool preceding_only = true);

struct GroupingTraceRow {
  int iteration = 0;
  int super_shots = 0;
  int scene_count = 0;
  double score = 0.0;
};

struct GroupingResult {
  std::vector<std::uint8_t> bits;  // o_i over the n-1 shot boundaries
  std::vector<GroupingTraceRow> trace;
  int outer_iterations = 0;
  bool reached_fixpoint = false;
};

// Callback receiving the set before iteration 1 (iteration 0) and after each
// merge round; used for correlation dumps.
using GroupingSink = std::function<void(int iteration, const SuperShotSet&)>;

// Iterative super-shot merge loop: inner loop (up to k_para) alternates DP
// partitioning with weight refinement, then super shots within each scene
// merge into one; stops at the outer-iteration partition fixpoint or k_set.
GroupingResult optimal_grouping(const Manifest& m, const Eigen::VectorXd& p,
                                const GroupingConfig& cfg, const GroupingSink& sink = {});

// Pairwise cosine matrix as CSV (row/col = super-shot index).
void dump_correlation(const SuperShotSet& set, const std::filesystem::path& path);

void write_trace_csv(const std::vector<GroupingTraceRow>& trace,
                     const std::filesystem::path& path);

}  // namespace lgss
