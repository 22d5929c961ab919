#include "lgss/synthetic.hpp"

#include <cmath>
#include <random>

namespace lgss {

namespace {

std::vector<float> unit_anchor(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(static_cast<size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  std::vector<float> out(static_cast<size_t>(dim));
  for (int i = 0; i < dim; ++i) out[static_cast<size_t>(i)] = static_cast<float>(v[static_cast<size_t>(i)] / norm);
  return out;
}

std::vector<float> noisy_feature(const std::vector<float>& anchor, double sigma,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(anchor.size());
  double norm = 0.0;
  for (size_t i = 0; i < anchor.size(); ++i) {
    v[i] = static_cast<double>(anchor[i]) + sigma * gauss(rng);
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  std::vector<float> out(anchor.size());
  if (norm < 1e-12) return anchor;
  for (size_t i = 0; i < anchor.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

}  // namespace

void validate_synthetic_config(const SyntheticConfig& cfg) {
  if (cfg.n_scenes_min < 1 || cfg.n_scenes_max < cfg.n_scenes_min) {
    throw ValidationError("synthetic config: empty scene count range");
  }
  if (cfg.shots_per_scene_min < 1 || cfg.shots_per_scene_max < cfg.shots_per_scene_min) {
    throw ValidationError("synthetic config: empty shots-per-scene range");
  }
  if (cfg.modality_dims.empty()) throw ValidationError("synthetic config: no modalities");
  for (const auto& [name, dim] : cfg.modality_dims) {
    if (dim < 1) throw ValidationError("synthetic config: non-positive dim for " + name);
    if (cfg.sigma_for(name) < 0.0) throw ValidationError("synthetic config: negative noise_sigma");
  }
  if (cfg.anchor_share_prob < 0.0 || cfg.anchor_share_prob > 1.0) {
    throw ValidationError("synthetic config: anchor_share_prob outside [0,1]");
  }
  if (cfg.shot_duration_min_s <= 0.0 || cfg.shot_duration_max_s < cfg.shot_duration_min_s) {
    throw ValidationError("synthetic config: bad shot duration range");
  }
  // A 1-scene movie with a single shot would violate the n >= 2 invariant.
  if (cfg.n_scenes_min * cfg.shots_per_scene_min < 2) {
    throw ValidationError("synthetic config: movie can come out shorter than 2 shots");
  }
}

Manifest generate_synthetic_movie(const SyntheticConfig& cfg) {
  validate_synthetic_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> scene_count_dist(cfg.n_scenes_min, cfg.n_scenes_max);
  std::uniform_int_distribution<int> shots_dist(cfg.shots_per_scene_min, cfg.shots_per_scene_max);
  std::uniform_real_distribution<double> duration_dist(cfg.shot_duration_min_s,
                                                       cfg.shot_duration_max_s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Manifest m;
  m.movie_id = cfg.movie_id.empty() ? "synth_" + std::to_string(cfg.seed) : cfg.movie_id;
  m.modalities = cfg.modality_dims;

  const int n_scenes = scene_count_dist(rng);
  const size_t n_mod = cfg.modality_dims.size();

  GroundTruth gt;
  std::vector<std::vector<float>> anchors(n_mod);
  double clock_s = 0.0;

  for (int scene = 0; scene < n_scenes; ++scene) {
    int shared = 0;
    for (size_t mi = 0; mi < n_mod; ++mi) {
      const bool carry = scene > 0 && unit(rng) < cfg.anchor_share_prob;
      if (carry) {
        ++shared;
      } else {
        anchors[mi] = unit_anchor(cfg.modality_dims[mi].second, rng);
      }
    }
    if (scene > 0) {
      const int boundary = static_cast<int>(m.shots.size());
      gt.boundaries.push_back(boundary);
      gt.confidence[boundary] =
          shared >= 3 ? BoundaryConfidence::kLow : BoundaryConfidence::kHigh;
    }
    const int n_shots = shots_dist(rng);
    for (int s = 0; s < n_shots; ++s) {
      Shot shot;
      shot.index = static_cast<int>(m.shots.size());
      shot.start_s = clock_s;
      clock_s += duration_dist(rng);
      shot.end_s = clock_s;
      for (size_t mi = 0; mi < n_mod; ++mi) {
        shot.features.push_back(
            noisy_feature(anchors[mi], cfg.sigma_for(cfg.modality_dims[mi].first), rng));
      }
      m.shots.push_back(std::move(shot));
    }
  }
  m.gt = std::move(gt);
  return m;
}

std::vector<Manifest> generate_synthetic_corpus(const SyntheticConfig& cfg, int count,
                                                const std::string& id_prefix) {
  std::vector<Manifest> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    SyntheticConfig per = cfg;
    per.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    per.movie_id = id_prefix + buf;
    out.push_back(generate_synthetic_movie(per));
  }
  return out;
}

}  // namespace lgss
