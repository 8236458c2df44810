#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace synthasm {

/// Axis-aligned box in pixels: top-left corner plus size.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

/// Area-based intersection over union of two continuous boxes.
double iou(const Box& a, const Box& b);

struct Detection {
  std::string image;
  int class_index = 0;
  Box box;
  double confidence = 0.0;
};

struct GroundTruth {
  std::string image;
  int class_index = 0;
  Box box;
};

struct Match {
  std::size_t detection = 0;
  /// Index of the claimed ground-truth box, -1 for a false positive.
  int ground_truth = -1;
  double iou = 0.0;
  double confidence = 0.0;
  bool true_positive = false;
};

struct MatchResult {
  /// One entry per detection, in descending confidence order.
  std::vector<Match> matches;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

/// Greedy matching for one image and one class: detections in descending
/// confidence (ties keep input order) each claim the unmatched ground truth
/// with the highest IoU (ties: lowest index), provided IoU >= threshold.
MatchResult match_detections(std::span<const Detection> detections, std::span<const Box> ground_truth,
                             double iou_threshold);

struct ScoredMatch {
  double confidence = 0.0;
  bool true_positive = false;
};

/// 101-point interpolated average precision. With no ground truth the result
/// is 1 when there are also no detections and 0 otherwise.
double average_precision(std::span<const ScoredMatch> matches, std::int64_t total_ground_truth);

/// {0.50, 0.55, ..., 0.95}
const std::array<double, 10>& iou_thresholds();

struct EvalOptions {
  /// Detections below this confidence are ignored for precision/recall.
  double conf_threshold = 0.25;
};

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double ap50 = 0.0;
  double ap50_95 = 0.0;
  std::array<double, 10> ap{};  // per entry of iou_thresholds()
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ground_truth = 0;
  std::int64_t detections = 0;
  /// False for classes with neither ground truth nor detections; those are
  /// left out of the "All" row.
  bool included = false;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  /// Macro average over included classes; tp/fp/fn are summed.
  ClassMetrics all;
  EvalOptions options;
};

struct GroundTruthSet {
  /// Every evaluated image, including ones without boxes.
  std::vector<std::string> images;
  std::vector<GroundTruth> boxes;
};

/// Throws DataError for detections or boxes naming an unknown image or a
/// class outside `categories`.
EvalReport evaluate(std::span<const Detection> detections, const GroundTruthSet& ground_truth,
                    std::span<const std::string> categories, const EvalOptions& options = {});

/// Aligned table: All row first, then one row per class.
std::string format_report(const EvalReport& report);
std::string report_json(const EvalReport& report);

/// (train_size / batch_size) * epochs, unrounded. Throws ValidationError for
/// a batch size of zero or less.
double training_iterations(std::int64_t train_size, std::int64_t batch_size, std::int64_t epochs);

}  // namespace synthasm
