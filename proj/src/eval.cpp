#include "synthasm/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

std::vector<std::size_t> by_confidence(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
  return order;
}

double ratio(std::int64_t num, std::int64_t den) { return den > 0 ? double(num) / double(den) : 0.0; }

}  // namespace

double iou(const Box& a, const Box& b) {
  // Areas use the same corner differences as the overlap so that iou(a, a) is exactly 1.
  const double ax1 = a.x + a.w, ay1 = a.y + a.h, bx1 = b.x + b.w, by1 = b.y + b.h;
  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = (ax1 - a.x) * (ay1 - a.y) + (bx1 - b.x) * (by1 - b.y) - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

MatchResult match_detections(std::span<const Detection> detections, std::span<const Box> ground_truth,
                             double iou_threshold) {
  MatchResult result;
  std::vector<bool> taken(ground_truth.size(), false);
  for (const std::size_t d : by_confidence(detections)) {
    Match m;
    m.detection = d;
    m.confidence = detections[d].confidence;
    double best = -1.0;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (taken[g]) continue;
      const double overlap = iou(detections[d].box, ground_truth[g]);
      if (overlap >= iou_threshold && overlap > best) {
        best = overlap;
        m.ground_truth = static_cast<int>(g);
      }
    }
    if (m.ground_truth >= 0) {
      taken[static_cast<std::size_t>(m.ground_truth)] = true;
      m.iou = best;
      m.true_positive = true;
      ++result.tp;
    } else {
      ++result.fp;
    }
    result.matches.push_back(m);
  }
  result.fn = static_cast<std::int64_t>(std::count(taken.begin(), taken.end(), false));
  return result;
}

double average_precision(std::span<const ScoredMatch> matches, std::int64_t total_ground_truth) {
  if (total_ground_truth <= 0) return matches.empty() ? 1.0 : 0.0;

  std::vector<std::size_t> order(matches.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return matches[a].confidence > matches[b].confidence; });

  std::vector<double> recall(order.size());
  std::vector<double> precision(order.size());
  std::int64_t tp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (matches[order[i]].true_positive) ++tp;
    recall[i] = double(tp) / double(total_ground_truth);
    precision[i] = double(tp) / double(i + 1);
  }
  // Envelope: best precision achievable at this recall or beyond.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

const std::array<double, 10>& iou_thresholds() {
  static const std::array<double, 10> thresholds = [] {
    std::array<double, 10> t{};
    for (int k = 0; k < 10; ++k) t[k] = (50 + 5 * k) / 100.0;
    return t;
  }();
  return thresholds;
}

EvalReport evaluate(std::span<const Detection> detections, const GroundTruthSet& ground_truth,
                    std::span<const std::string> categories, const EvalOptions& options) {
  const std::set<std::string> images(ground_truth.images.begin(), ground_truth.images.end());
  const int num_classes = static_cast<int>(categories.size());

  // cells[class][image] holds the detections and ground-truth boxes of one image and class.
  struct Cell {
    std::vector<Detection> dets;
    std::vector<Box> gts;
  };
  std::vector<std::map<std::string, Cell>> cells(categories.size());

  for (const auto& g : ground_truth.boxes) {
    if (!images.count(g.image)) throw DataError("ground truth references unknown image '" + g.image + "'");
    if (g.class_index < 0 || g.class_index >= num_classes) {
      throw DataError("ground truth in '" + g.image + "' has unknown class " + std::to_string(g.class_index));
    }
    cells[g.class_index][g.image].gts.push_back(g.box);
  }
  for (const auto& d : detections) {
    if (!images.count(d.image)) throw DataError("detection references unknown image '" + d.image + "'");
    if (d.class_index < 0 || d.class_index >= num_classes) {
      throw DataError("detection in '" + d.image + "' has unknown class " + std::to_string(d.class_index));
    }
    cells[d.class_index][d.image].dets.push_back(d);
  }

  EvalReport report;
  report.options = options;
  const auto& thresholds = iou_thresholds();
  for (int c = 0; c < num_classes; ++c) {
    ClassMetrics m;
    m.name = categories[c];
    for (const auto& [image, cell] : cells[c]) {
      m.ground_truth += static_cast<std::int64_t>(cell.gts.size());
      m.detections += static_cast<std::int64_t>(cell.dets.size());
    }
    m.included = m.ground_truth > 0 || m.detections > 0;

    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<ScoredMatch> scored;
      for (const auto& [image, cell] : cells[c]) {
        for (const auto& match : match_detections(cell.dets, cell.gts, thresholds[t]).matches) {
          scored.push_back({match.confidence, match.true_positive});
        }
      }
      m.ap[t] = average_precision(scored, m.ground_truth);
    }
    if (m.ground_truth == 0) m.ap.fill(0.0);
    m.ap50 = m.ap[0];
    m.ap50_95 = std::accumulate(m.ap.begin(), m.ap.end(), 0.0) / double(m.ap.size());

    for (const auto& [image, cell] : cells[c]) {
      std::vector<Detection> confident;
      for (const auto& d : cell.dets) {
        if (d.confidence >= options.conf_threshold) confident.push_back(d);
      }
      const MatchResult r = match_detections(confident, cell.gts, thresholds[0]);
      m.tp += r.tp;
      m.fp += r.fp;
      m.fn += r.fn;
    }
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    report.classes.push_back(std::move(m));
  }

  ClassMetrics& all = report.all;
  all.name = "All";
  std::int64_t included = 0;
  for (const auto& m : report.classes) {
    all.tp += m.tp;
    all.fp += m.fp;
    all.fn += m.fn;
    all.ground_truth += m.ground_truth;
    all.detections += m.detections;
    if (!m.included) continue;
    ++included;
    all.precision += m.precision;
    all.recall += m.recall;
    all.ap50 += m.ap50;
    all.ap50_95 += m.ap50_95;
    for (std::size_t t = 0; t < all.ap.size(); ++t) all.ap[t] += m.ap[t];
  }
  all.included = included > 0;
  if (included > 0) {
    const double n = double(included);
    all.precision /= n;
    all.recall /= n;
    all.ap50 /= n;
    all.ap50_95 /= n;
    for (auto& v : all.ap) v /= n;
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line,
                "# AP: 101-point interpolated; precision/recall at IoU 0.50, confidence >= %.2f\n",
                report.options.conf_threshold);
  out += line;
  std::size_t name_width = 5;
  for (const auto& m : report.classes) name_width = std::max(name_width, m.name.size());
  const int w = static_cast<int>(name_width);
  std::snprintf(line, sizeof line, "%-*s  %9s  %9s  %9s  %12s  %6s  %6s  %6s\n", w, "Class", "Precision", "Recall",
                "mAP@0.5", "mAP@0.5:0.95", "TP", "FP", "FN");
  out += line;
  const auto row = [&](const ClassMetrics& m) {
    std::snprintf(line, sizeof line, "%-*s  %9.3f  %9.3f  %9.3f  %12.3f  %6lld  %6lld  %6lld%s\n", w, m.name.c_str(),
                  m.precision, m.recall, m.ap50, m.ap50_95, static_cast<long long>(m.tp),
                  static_cast<long long>(m.fp), static_cast<long long>(m.fn), m.included ? "" : "  (excluded)");
    out += line;
  };
  row(report.all);
  for (const auto& m : report.classes) row(m);
  return out;
}

std::string report_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  const auto encode = [](const ClassMetrics& m) {
    ordered_json j;
    j["class"] = m.name;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["map50"] = m.ap50;
    j["map50_95"] = m.ap50_95;
    j["ap_per_threshold"] = m.ap;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    j["ground_truth"] = m.ground_truth;
    j["detections"] = m.detections;
    j["included"] = m.included;
    return j;
  };
  ordered_json root;
  root["interpolation"] = "101-point";
  root["iou_thresholds"] = iou_thresholds();
  root["conf_threshold"] = report.options.conf_threshold;
  root["all"] = encode(report.all);
  root["classes"] = ordered_json::array();
  for (const auto& m : report.classes) root["classes"].push_back(encode(m));
  return root.dump(2) + "\n";
}

double training_iterations(std::int64_t train_size, std::int64_t batch_size, std::int64_t epochs) {
  if (batch_size <= 0) throw ValidationError("batch size must be positive");
  return static_cast<double>(train_size) / static_cast<double>(batch_size) * static_cast<double>(epochs);
}

}  // namespace synthasm
