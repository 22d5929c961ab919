#include "lgss/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lgss {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kContiguityTolerance = 1e-6;

std::string confidence_name(BoundaryConfidence c) {
  return c == BoundaryConfidence::kHigh ? "high" : "low";
}

BoundaryConfidence confidence_from_name(const std::string& s) {
  if (s == "high") return BoundaryConfidence::kHigh;
  if (s == "low") return BoundaryConfidence::kLow;
  throw FormatError("unknown confidence tag: " + s);
}

}  // namespace

int Manifest::modality_index(const std::string& name) const {
  for (size_t i = 0; i < modalities.size(); ++i) {
    if (modalities[i].first == name) return static_cast<int>(i);
  }
  return -1;
}

double Manifest::boundary_time(int boundary_index) const {
  return shots[static_cast<size_t>(boundary_index - 1)].end_s;
}

std::vector<double> Manifest::boundary_times() const {
  std::vector<double> t;
  t.reserve(static_cast<size_t>(boundary_count()));
  for (int i = 1; i <= boundary_count(); ++i) t.push_back(boundary_time(i));
  return t;
}

std::vector<std::uint8_t> Manifest::gt_bits() const {
  std::vector<std::uint8_t> bits(static_cast<size_t>(boundary_count()), 0);
  if (gt) {
    for (int b : gt->boundaries) {
      if (b >= 1 && b <= boundary_count()) bits[static_cast<size_t>(b - 1)] = 1;
    }
  }
  return bits;
}

std::vector<int> Manifest::scene_ids() const {
  std::vector<int> ids(static_cast<size_t>(shot_count()), 0);
  const auto bits = gt_bits();
  int scene = 0;
  for (int s = 0; s < shot_count(); ++s) {
    if (s > 0 && bits[static_cast<size_t>(s - 1)]) ++scene;
    ids[static_cast<size_t>(s)] = scene;
  }
  return ids;
}

std::vector<Violation> validate_manifest(const Manifest& m) {
  std::vector<Violation> out;
  const auto movie_violation = [&](const std::string& rule, const std::string& msg) {
    out.push_back({-1, rule, msg});
  };
  const auto shot_violation = [&](int shot, const std::string& rule, const std::string& msg) {
    out.push_back({shot, rule, msg});
  };

  if (m.movie_id.empty()) movie_violation("empty movie id", "movie_id must be nonempty");

  const int n = m.shot_count();
  if (n < 2) movie_violation("too few shots", "a movie needs at least 2 shots");

  if (m.modalities.empty()) movie_violation("no modalities", "at least one modality required");
  std::set<std::string> seen;
  for (const auto& [name, dim] : m.modalities) {
    const auto& ids = known_modalities();
    if (std::find(ids.begin(), ids.end(), name) == ids.end()) {
      movie_violation("unknown modality", "modality id not recognized: " + name);
    }
    if (!seen.insert(name).second) {
      movie_violation("duplicate modality", "modality declared twice: " + name);
    }
    if (dim < 1) movie_violation("non-positive dimension", "modality " + name + " has dim < 1");
  }

  for (int s = 0; s < n; ++s) {
    const Shot& shot = m.shots[static_cast<size_t>(s)];
    if (shot.index != s) {
      shot_violation(s, "shot index mismatch",
                     "expected index " + std::to_string(s) + ", got " + std::to_string(shot.index));
    }
    if (!(shot.end_s > shot.start_s)) {
      shot_violation(s, "non-positive duration", "end_s must exceed start_s");
    }
    if (s > 0) {
      const double prev_end = m.shots[static_cast<size_t>(s - 1)].end_s;
      if (std::abs(shot.start_s - prev_end) > kContiguityTolerance) {
        shot_violation(s, "non-contiguous shots", "shot does not start where the previous one ends");
      }
    }
    if (shot.features.size() != m.modalities.size()) {
      shot_violation(s, "missing modality", "feature count does not match declared modalities");
      continue;
    }
    for (size_t mi = 0; mi < m.modalities.size(); ++mi) {
      const auto& [name, dim] = m.modalities[mi];
      const auto& vec = shot.features[mi];
      if (static_cast<int>(vec.size()) != dim) {
        shot_violation(s, "dimension mismatch",
                       name + " has " + std::to_string(vec.size()) + " entries, header declares " +
                           std::to_string(dim));
      }
      for (float v : vec) {
        if (!std::isfinite(v)) {
          shot_violation(s, "non-finite feature", "NaN/Inf entry in modality " + name);
          break;
        }
      }
    }
  }

  if (m.gt) {
    int prev = 0;
    for (int b : m.gt->boundaries) {
      if (b < 1 || b > n - 1) {
        movie_violation("boundary index out of range",
                        "gt boundary " + std::to_string(b) + " outside [1, " + std::to_string(n - 1) + "]");
      }
      if (b <= prev) movie_violation("unsorted boundaries", "gt boundaries must be strictly increasing");
      prev = b;
    }
    const std::set<int> bset(m.gt->boundaries.begin(), m.gt->boundaries.end());
    for (const auto& [b, _] : m.gt->confidence) {
      if (!bset.count(b)) {
        movie_violation("confidence for unknown boundary",
                        "confidence tag at " + std::to_string(b) + " has no matching gt boundary");
      }
    }
  }

  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest parse failure in " + path.string() + ": " + e.what());
  }

  Manifest m;
  try {
    m.movie_id = doc.at("movie_id").get<std::string>();
    for (const auto& [name, dim] : doc.at("modality_dims").items()) {
      m.modalities.emplace_back(name, dim.get<int>());
    }
    for (const auto& js : doc.at("shots")) {
      Shot shot;
      shot.index = js.at("index").get<int>();
      shot.start_s = js.at("start_s").get<double>();
      shot.end_s = js.at("end_s").get<double>();
      const auto& feats = js.at("features");
      for (const auto& [name, dim] : m.modalities) {
        (void)dim;
        std::vector<float> vec;
        if (feats.contains(name)) {
          for (const auto& v : feats.at(name)) vec.push_back(v.get<float>());
        }
        shot.features.push_back(std::move(vec));
      }
      m.shots.push_back(std::move(shot));
    }
    if (doc.contains("gt")) {
      GroundTruth gt;
      for (const auto& b : doc.at("gt").at("boundaries")) gt.boundaries.push_back(b.get<int>());
      if (doc.at("gt").contains("confidence")) {
        for (const auto& [key, val] : doc.at("gt").at("confidence").items()) {
          gt.confidence[std::stoi(key)] = confidence_from_name(val.get<std::string>());
        }
      }
      m.gt = std::move(gt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest field error in " + path.string() + ": " + e.what());
  }

  const auto violations = validate_manifest(m);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "manifest " << path.string() << " invalid: " << violations.front().rule;
    if (violations.front().shot_index >= 0) os << " (shot " << violations.front().shot_index << ")";
    os << ": " << violations.front().message;
    if (violations.size() > 1) os << " (+" << violations.size() - 1 << " more)";
    throw ValidationError(os.str());
  }
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  ordered_json doc;
  doc["movie_id"] = m.movie_id;
  ordered_json dims = ordered_json::object();
  for (const auto& [name, dim] : m.modalities) dims[name] = dim;
  doc["modality_dims"] = std::move(dims);

  ordered_json shots = ordered_json::array();
  for (const Shot& shot : m.shots) {
    ordered_json js;
    js["index"] = shot.index;
    js["start_s"] = shot.start_s;
    js["end_s"] = shot.end_s;
    ordered_json feats = ordered_json::object();
    for (size_t mi = 0; mi < m.modalities.size(); ++mi) {
      ordered_json arr = ordered_json::array();
      if (mi < shot.features.size()) {
        // float -> double is exact; nlohmann emits shortest round-trip
        // decimals, so 32-bit values survive save/load bit-identically.
        for (float v : shot.features[mi]) arr.push_back(static_cast<double>(v));
      }
      feats[m.modalities[mi].first] = std::move(arr);
    }
    js["features"] = std::move(feats);
    shots.push_back(std::move(js));
  }
  doc["shots"] = std::move(shots);

  if (m.gt) {
    ordered_json gt;
    gt["boundaries"] = m.gt->boundaries;
    if (!m.gt->confidence.empty()) {
      ordered_json conf = ordered_json::object();
      for (const auto& [b, c] : m.gt->confidence) conf[std::to_string(b)] = confidence_name(c);
      gt["confidence"] = std::move(conf);
    }
    doc["gt"] = std::move(gt);
  }

  atomic_write_file(path, doc.dump(1) + "\n");
}

bool manifests_equal(const Manifest& a, const Manifest& b) {
  if (a.movie_id != b.movie_id || a.modalities != b.modalities) return false;
  if (a.shots.size() != b.shots.size()) return false;
  for (size_t i = 0; i < a.shots.size(); ++i) {
    const Shot& x = a.shots[i];
    const Shot& y = b.shots[i];
    if (x.index != y.index || x.start_s != y.start_s || x.end_s != y.end_s) return false;
    if (x.features != y.features) return false;
  }
  if (a.gt.has_value() != b.gt.has_value()) return false;
  if (a.gt && (a.gt->boundaries != b.gt->boundaries || a.gt->confidence != b.gt->confidence)) return false;
  return true;
}

}  // namespace lgss
