#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lgss/manifest.hpp"

namespace lgss {

// Configuration for the deterministic synthetic movie generator. Scenes are
// built around per-modality unit anchors; with probability anchor_share_prob a
// modality anchor carries over from the previous scene, which makes that
// boundary invisible to the shared modality (the hard cases where single-cue
// baselines fail).
struct SyntheticConfig {
  int n_scenes_min = 5;
  int n_scenes_max = 15;
  int shots_per_scene_min = 4;
  int shots_per_scene_max = 20;
  std::vector<std::pair<std::string, int>> modality_dims = {
      {"place", 16}, {"cast", 16}, {"action", 16}, {"audio", 16}};
  std::map<std::string, double> noise_sigma;  // defaults to 0.3 per modality
  double anchor_share_prob = 0.3;
  double shot_duration_min_s = 1.0;
  double shot_duration_max_s = 5.0;
  std::uint64_t seed = 0;
  std::string movie_id;  // derived from the seed when empty

  double sigma_for(const std::string& modality) const {
    auto it = noise_sigma.find(modality);
    return it == noise_sigma.end() ? 0.3 : it->second;
  }
};

// Throws ValidationError when ranges are empty or probabilities/sigmas are out
// of range.
void validate_synthetic_config(const SyntheticConfig& cfg);

// Deterministic in cfg.seed. gt_boundaries are the exact scene transitions;
// boundaries where three or more modality anchors carried over are tagged as
// low-confidence.
Manifest generate_synthetic_movie(const SyntheticConfig& cfg);

// Convenience: count movies, each with an independent seed mixed from
// cfg.seed and its index.
std::vector<Manifest> generate_synthetic_corpus(const SyntheticConfig& cfg, int count,
                                                const std::string& id_prefix);

}  // namespace lgss
