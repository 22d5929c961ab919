#include "lgss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "lgss/util.hpp"

namespace lgss {

namespace {

// boundary bits -> inclusive shot intervals
std::vector<std::pair<int, int>> scene_intervals(const std::vector<std::uint8_t>& bits,
                                                 int n_shots) {
  std::vector<std::pair<int, int>> scenes;
  int lo = 0;
  for (size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) {
      scenes.emplace_back(lo, static_cast<int>(k));  // boundary k+1 cuts before shot k+1
      lo = static_cast<int>(k) + 1;
    }
  }
  scenes.emplace_back(lo, n_shots - 1);
  return scenes;
}

double interval_iou(std::pair<int, int> a, std::pair<int, int> b) {
  const int inter = std::min(a.second, b.second) - std::max(a.first, b.first) + 1;
  if (inter <= 0) return 0.0;
  const int uni = std::max(a.second, b.second) - std::min(a.first, b.first) + 1;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_best_iou(const std::vector<std::pair<int, int>>& from,
                     const std::vector<std::pair<int, int>>& against) {
  double sum = 0.0;
  for (const auto& scene : from) {
    double best = 0.0;
    for (const auto& other : against) best = std::max(best, interval_iou(scene, other));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("average_precision: length mismatch");
  }
  const int n_pos = static_cast<int>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0) return std::nullopt;

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)]) {
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    }
    return a < b;
  });

  double ap = 0.0;
  int hits = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[static_cast<size_t>(order[rank])]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(n_pos);
}

double miou(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
            int n_shots) {
  if (pred.size() != gt.size() || static_cast<int>(pred.size()) != n_shots - 1) {
    throw ValidationError("miou: boundary vectors must have n_shots - 1 entries");
  }
  const auto pred_scenes = scene_intervals(pred, n_shots);
  const auto gt_scenes = scene_intervals(gt, n_shots);
  return 0.5 * (mean_best_iou(gt_scenes, pred_scenes) + mean_best_iou(pred_scenes, gt_scenes));
}

std::optional<double> boundary_recall(const std::vector<std::uint8_t>& pred,
                                      const std::vector<std::uint8_t>& gt,
                                      const std::vector<double>& boundary_times, double window_s) {
  if (pred.size() != gt.size() || pred.size() != boundary_times.size()) {
    throw ValidationError("boundary_recall: length mismatch");
  }
  if (window_s < 0.0) throw ValidationError("boundary_recall: negative window");

  int total = 0;
  int hit = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i]) continue;
    ++total;
    if (window_s == 0.0) {
      hit += pred[i] ? 1 : 0;
      continue;
    }
    for (size_t j = 0; j < pred.size(); ++j) {
      if (pred[j] && std::abs(boundary_times[i] - boundary_times[j]) <= window_s) {
        ++hit;
        break;
      }
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

MetricsReport evaluate_corpus(const std::map<std::string, PredTrack>& preds,
                              const std::map<std::string, GtTrack>& gts,
                              double recall_window_s) {
  if (preds.size() != gts.size()) {
    throw ValidationError("evaluate_corpus: prediction/gt key sets differ");
  }
  MetricsReport report;
  double ap_sum = 0.0, miou_sum = 0.0, recall_sum = 0.0, recall3_sum = 0.0;
  int scored = 0;

  for (const auto& [movie_id, gt] : gts) {
    const auto it = preds.find(movie_id);
    if (it == preds.end()) {
      throw ValidationError("evaluate_corpus: missing predictions for " + movie_id);
    }
    const PredTrack& pred = it->second;
    const int n_shots = static_cast<int>(gt.bits.size()) + 1;

    MovieMetrics mm;
    mm.movie_id = movie_id;
    mm.n_boundaries = static_cast<int>(gt.bits.size());
    mm.n_positives = static_cast<int>(std::count(gt.bits.begin(), gt.bits.end(), 1));
    mm.miou = miou(pred.bits, gt.bits, n_shots);
    miou_sum += mm.miou;

    const auto ap = average_precision(pred.scores, gt.bits);
    const auto recall = boundary_recall(pred.bits, gt.bits, gt.boundary_times, 0.0);
    const auto recall3 = boundary_recall(pred.bits, gt.bits, gt.boundary_times, recall_window_s);
    if (ap && recall && recall3) {
      mm.ap = *ap;
      mm.recall = *recall;
      mm.recall_at_3s = *recall3;
      ap_sum += mm.ap;
      recall_sum += mm.recall;
      recall3_sum += mm.recall_at_3s;
      ++scored;
    } else {
      mm.has_positives = false;
      ++report.excluded_movies;
    }
    report.movies.push_back(std::move(mm));
  }

  const int total = static_cast<int>(report.movies.size());
  report.mean_miou = total > 0 ? miou_sum / total : 0.0;
  if (scored > 0) {
    report.mean_ap = ap_sum / scored;
    report.mean_recall = recall_sum / scored;
    report.mean_recall_at_3s = recall3_sum / scored;
  }
  return report;
}

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "movie_id,n_boundaries,n_positives,ap,miou,recall,recall_at_3s,excluded\n";
  os << std::setprecision(10);
  for (const MovieMetrics& mm : report.movies) {
    os << mm.movie_id << "," << mm.n_boundaries << "," << mm.n_positives << ",";
    if (mm.has_positives) {
      os << mm.ap << "," << mm.miou << "," << mm.recall << "," << mm.recall_at_3s << ",0\n";
    } else {
      os << "nan," << mm.miou << ",nan,nan,1\n";
    }
  }
  os << "mean," << report.movies.size() << "," << report.excluded_movies << "," << report.mean_ap
     << "," << report.mean_miou << "," << report.mean_recall << "," << report.mean_recall_at_3s
     << ",0\n";
  atomic_write_file(path, os.str());
}

}  // namespace lgss
