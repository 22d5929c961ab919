#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lgss {

// AP over boundaries sorted by descending score (ties by index); precision at
// each positive's rank averaged over positives. nullopt when there are no
// positive labels (the movie is then excluded from corpus means).
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<std::uint8_t>& labels);

// Symmetric mean of per-scene best interval IoU between the two partitions
// induced by the boundary vectors; IoU counted in shots. Empty cut sets give
// the single whole-movie scene.
double miou(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
            int n_shots);

// Fraction of gt boundaries with a predicted boundary within window_s seconds
// of their timestamps; window_s == 0 means exact index match. nullopt when
// there are no gt boundaries.
std::optional<double> boundary_recall(const std::vector<std::uint8_t>& pred,
                                      const std::vector<std::uint8_t>& gt,
                                      const std::vector<double>& boundary_times, double window_s);

struct PredTrack {
  std::vector<double> scores;
  std::vector<std::uint8_t> bits;
};

struct GtTrack {
  std::vector<std::uint8_t> bits;
  std::vector<double> boundary_times;
};

struct MovieMetrics {
  std::string movie_id;
  int n_boundaries = 0;
  int n_positives = 0;
  double ap = 0.0;
  double miou = 0.0;
  double recall = 0.0;
  double recall_at_3s = 0.0;
  bool has_positives = true;  // false: excluded from ap/recall means
};

struct MetricsReport {
  std::vector<MovieMetrics> movies;
  double mean_ap = 0.0;
  double mean_miou = 0.0;
  double mean_recall = 0.0;
  double mean_recall_at_3s = 0.0;
  int excluded_movies = 0;
};

// Per-movie metrics plus unweighted corpus means. Movies without positive
// labels stay in the report flagged, excluded from the ap/recall means.
// Throws when the key sets differ.
MetricsReport evaluate_corpus(const std::map<std::string, PredTrack>& preds,
                              const std::map<std::string, GtTrack>& gts,
                              double recall_window_s = 3.0);

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace lgss
