#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lgss/util.hpp"

namespace lgss {

// Canonical modality identifiers a manifest may declare.
inline const std::vector<std::string>& known_modalities() {
  static const std::vector<std::string> ids = {"place", "cast", "action", "audio"};
  return ids;
}

enum class BoundaryConfidence { kHigh, kLow };

struct Shot {
  int index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  // One vector per declared modality, aligned with Manifest::modalities.
  std::vector<std::vector<float>> features;
};

struct GroundTruth {
  // Scene boundary indices i in [1, n-1]; boundary i is the junction between
  // shots i-1 and i (0-based), i.e. after the i-th shot counting from 1.
  std::vector<int> boundaries;
  std::map<int, BoundaryConfidence> confidence;
};

struct Manifest {
  std::string movie_id;
  // Modality name -> feature dimension. Order is significant: feature blocks
  // downstream follow manifest order.
  std::vector<std::pair<std::string, int>> modalities;
  std::vector<Shot> shots;
  std::optional<GroundTruth> gt;

  int shot_count() const { return static_cast<int>(shots.size()); }
  int boundary_count() const { return static_cast<int>(shots.size()) - 1; }

  int modality_index(const std::string& name) const;
  int modality_dim(int idx) const { return modalities[static_cast<size_t>(idx)].second; }

  // Timestamp of boundary i: end time of the i-th shot (1-based), i.e.
  // shots[i-1].end_s.
  double boundary_time(int boundary_index) const;
  std::vector<double> boundary_times() const;

  // Ground truth as a 0/1 vector of length n-1 (entry k = boundary k+1).
  std::vector<std::uint8_t> gt_bits() const;

  // Scene id per shot, derived from gt boundaries.
  std::vector<int> scene_ids() const;
};

struct Violation {
  int shot_index = -1;  // -1 for movie-level violations
  std::string rule;
  std::string message;
};

// Empty result iff every manifest invariant holds.
std::vector<Violation> validate_manifest(const Manifest& m);

// Parses and validates. Throws FormatError on malformed input and
// ValidationError (naming the violated rule) on invariant violations.
Manifest load_manifest(const std::filesystem::path& path);

// Writes the manifest; load_manifest reproduces it exactly (feature values
// bit-identical). Repeated saves are byte-identical.
void save_manifest(const Manifest& m, const std::filesystem::path& path);

bool manifests_equal(const Manifest& a, const Manifest& b);

}  // namespace lgss
