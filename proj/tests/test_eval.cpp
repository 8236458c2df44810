#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "synthasm/error.hpp"
#include "synthasm/eval.hpp"
#include "eval_oracle.hpp"

using namespace synthasm;
using namespace synthasm::testing;

namespace {

// Counts unit cells covered by a box with integer corners.
double pixel_iou(const Box& a, const Box& b) {
  std::int64_t in_a = 0, in_b = 0, both = 0;
  for (int y = -20; y < 60; ++y) {
    for (int x = -20; x < 60; ++x) {
      const bool pa = x >= a.x && x + 1 <= a.x + a.w && y >= a.y && y + 1 <= a.y + a.h;
      const bool pb = x >= b.x && x + 1 <= b.x + b.w && y >= b.y && y + 1 <= b.y + b.h;
      in_a += pa;
      in_b += pb;
      both += pa && pb;
    }
  }
  return double(both) / double(in_a + in_b - both);
}

std::vector<Detection> dets_of(const std::vector<std::pair<Box, double>>& items) {
  std::vector<Detection> out;
  for (const auto& [box, conf] : items) out.push_back({"img", 0, box, conf});
  return out;
}

// Exhaustive search over partial assignments. Detections are visited in
// descending confidence; an assignment is scored by the sequence
// (iou_1, -gt_1, iou_2, -gt_2, ...) with (-1, 0) for an unmatched detection,
// compared lexicographically.
std::vector<int> lexicographic_optimum(const std::vector<Detection>& dets, const std::vector<Box>& gts, double thr) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dets[a].confidence > dets[b].confidence; });

  std::vector<double> best_key;
  std::vector<int> best, current(dets.size(), -1);
  std::vector<bool> used(gts.size(), false);
  std::vector<double> key;
  std::function<void(std::size_t)> visit = [&](std::size_t k) {
    if (k == order.size()) {
      if (best_key.empty() || key > best_key) {
        best_key = key;
        best = current;
      }
      return;
    }
    const std::size_t d = order[k];
    key.push_back(-1.0);
    key.push_back(0.0);
    visit(k + 1);
    key.resize(key.size() - 2);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double o = iou(dets[d].box, gts[g]);
      if (used[g] || o < thr) continue;
      used[g] = true;
      current[d] = static_cast<int>(g);
      key.push_back(o);
      key.push_back(-double(g));
      visit(k + 1);
      key.resize(key.size() - 2);
      current[d] = -1;
      used[g] = false;
    }
  };
  visit(0);
  return best;
}

// Largest number of detection/ground-truth pairs with IoU >= thr.
int max_cardinality(const std::vector<Detection>& dets, const std::vector<Box>& gts, double thr) {
  std::vector<bool> used(gts.size(), false);
  std::function<int(std::size_t)> visit = [&](std::size_t d) -> int {
    if (d == dets.size()) return 0;
    int best = visit(d + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || iou(dets[d].box, gts[g]) < thr) continue;
      used[g] = true;
      best = std::max(best, 1 + visit(d + 1));
      used[g] = false;
    }
    return best;
  };
  return visit(0);
}


}  // namespace

TEST_CASE("IoU examples") {
  const Box a{0, 0, 2, 2}, b{1, 1, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{5, 5, 1, 1}) == 0.0);
  CHECK(std::abs(iou(a, b) - 1.0 / 7.0) < 1e-12);
  CHECK(std::abs(iou(a, b) - pixel_iou(a, b)) < 1e-12);
  CHECK(iou(a, Box{2, 0, 2, 2}) == 0.0);
}

TEST_CASE("IoU matches pixel counting on integer boxes") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pos(-10, 30), size(1, 20);
  for (int i = 0; i < 300; ++i) {
    const Box a{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    const Box b{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
    CHECK(std::abs(iou(a, b) - pixel_iou(a, b)) < 1e-12);
  }
}

TEST_CASE("IoU symmetry, identity and range") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10000; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(iou(a, a) == 1.0);
  }
}

TEST_CASE("matching examples") {
  const std::vector<Box> one{{0, 0, 10, 10}};
  const auto exact = match_detections(dets_of({{{0, 0, 10, 10}, 0.9}}), one, 0.5);
  CHECK(exact.tp == 1);
  CHECK(exact.fp == 0);
  CHECK(exact.fn == 0);

  const std::vector<Box> two{{0, 0, 10, 10}, {20, 20, 5, 5}};
  const auto none = match_detections(std::vector<Detection>{}, two, 0.5);
  CHECK(none.fn == 2);
  CHECK(none.tp == 0);

  // Both detections overlap the ground truth at IoU 0.9.
  const Box near{0, 0, 10, 9};
  REQUIRE(std::abs(iou(near, one[0]) - 0.9) < 1e-12);
  const auto dup = match_detections(dets_of({{near, 0.8}, {near, 0.9}}), one, 0.5);
  CHECK(dup.tp == 1);
  CHECK(dup.fp == 1);
  REQUIRE(dup.matches.size() == 2);
  CHECK(dup.matches[0].detection == 1);
  CHECK(dup.matches[0].true_positive);
  CHECK_FALSE(dup.matches[1].true_positive);
  CHECK(max_cardinality(dets_of({{near, 0.8}, {near, 0.9}}), one, 0.5) == 1);
}

TEST_CASE("matching tie-breaks") {
  const std::vector<Box> twins{{0, 0, 10, 10}, {0, 0, 10, 10}};
  const auto r = match_detections(dets_of({{{0, 0, 10, 10}, 0.5}, {{0, 0, 10, 10}, 0.5}}), twins, 0.5);
  CHECK(r.matches[0].detection == 0);
  CHECK(r.matches[0].ground_truth == 0);
  CHECK(r.matches[1].ground_truth == 1);
}

TEST_CASE("greedy can miss the maximum-cardinality matching") {
  // Detection A prefers the box B needs; greedy keeps one pair, an optimal
  // assignment keeps two.
  const std::vector<Box> gts{{0, 0, 10, 10}, {2, 0, 10, 10}};
  const Box a{1.5, 0, 10, 10}, b{3, 0, 10, 10};
  const auto dets = dets_of({{a, 0.9}, {b, 0.8}});
  const double thr = 0.6;
  const auto r = match_detections(dets, gts, thr);
  CHECK(r.tp == 1);
  CHECK(max_cardinality(dets, gts, thr) == 2);
}

TEST_CASE("greedy equals the confidence-ordered exhaustive optimum") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> count(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<Box> gts;
    for (int g = count(rng); g > 0; --g) gts.push_back(random_box(rng, 30.0));
    std::vector<Detection> dets;
    for (int d = count(rng); d > 0; --d) {
      Box box = random_box(rng, 30.0);
      if (!gts.empty() && u(rng) < 0.7) {
        box = gts[rng() % gts.size()];
        box.x += 4 * (u(rng) - 0.5);
        box.w *= 0.8 + 0.4 * u(rng);
      }
      // Coarse confidences produce ties.
      dets.push_back({"img", 0, box, std::round(u(rng) * 4) / 4});
    }
    const double thr = 0.3 + 0.6 * u(rng);
    const auto greedy = match_detections(dets, gts, thr);
    const auto optimum = lexicographic_optimum(dets, gts, thr);
    std::int64_t tp = 0;
    for (const auto& m : greedy.matches) {
      CHECK(m.ground_truth == optimum[m.detection]);
      tp += m.true_positive;
    }
    CHECK(greedy.tp == tp);
    CHECK(greedy.tp + greedy.fp == static_cast<std::int64_t>(dets.size()));
    CHECK(greedy.tp + greedy.fn == static_cast<std::int64_t>(gts.size()));
    CHECK(greedy.tp <= max_cardinality(dets, gts, thr));
  }
}

TEST_CASE("lowering the IoU threshold never loses true positives") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<Box> gts;
    for (int g = 0; g < 1 + trial % 5; ++g) gts.push_back(random_box(rng, 25.0));
    std::vector<Detection> dets;
    for (int d = 0; d < 1 + trial % 6; ++d) {
      Box box = gts[rng() % gts.size()];
      box.x += 6 * (u(rng) - 0.5);
      box.y += 6 * (u(rng) - 0.5);
      dets.push_back({"img", 0, box, u(rng)});
    }
    std::int64_t previous = -1;
    for (auto it = iou_thresholds().rbegin(); it != iou_thresholds().rend(); ++it) {
      const auto tp = match_detections(dets, gts, *it).tp;
      CHECK(tp >= previous);
      previous = tp;
    }
  }
}

TEST_CASE("average precision examples") {
  CHECK(average_precision(std::vector<ScoredMatch>{{0.9, true}}, 1) == 1.0);
  CHECK(average_precision(std::vector<ScoredMatch>{{0.9, false}, {0.4, false}}, 1) == 0.0);
  CHECK(average_precision(std::vector<ScoredMatch>{}, 3) == 0.0);
  CHECK(average_precision(std::vector<ScoredMatch>{}, 0) == 1.0);
  CHECK(average_precision(std::vector<ScoredMatch>{{0.5, false}}, 0) == 0.0);

  const std::vector<ScoredMatch> curve{{0.8, false}, {0.9, true}, {0.7, true}};
  const double expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
  CHECK(std::abs(average_precision(curve, 2) - expected) < 1e-12);
  CHECK(std::abs(brute_ap({{0.9, true}, {0.8, false}, {0.7, true}}, 2) - expected) < 1e-12);
}

TEST_CASE("average precision agrees with cutoff enumeration") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = trial % 12;
    std::vector<ScoredMatch> s;
    std::vector<std::pair<double, bool>> b;
    std::int64_t tps = 0;
    for (int i = 0; i < n; ++i) {
      const bool tp = u(rng) < 0.6;
      tps += tp;
      s.push_back({u(rng), tp});
      b.emplace_back(s.back().confidence, tp);
    }
    const std::int64_t gt = tps + static_cast<std::int64_t>(rng() % 4);
    const double ap = average_precision(s, gt);
    CHECK(std::abs(ap - brute_ap(b, gt)) < 1e-12);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
  }
}

TEST_CASE("threshold list") {
  const auto& t = iou_thresholds();
  CHECK(t.size() == 10);
  CHECK(t.front() == 0.5);
  CHECK(t.back() == 0.95);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::abs(t[i] - t[i - 1] - 0.05) < 1e-12);
}

TEST_CASE("perfect detector scores one everywhere") {
  std::mt19937_64 rng(2);
  GroundTruthSet gts;
  std::vector<Detection> dets;
  for (int i = 0; i < 4; ++i) {
    const std::string name = "img" + std::to_string(i);
    gts.images.push_back(name);
    for (int k = 0; k < 3; ++k) {
      const GroundTruth g{name, k % 2, random_box(rng)};
      gts.boxes.push_back(g);
      dets.push_back({name, g.class_index, g.box, 0.3 + 0.1 * k});
    }
  }
  const std::vector<std::string> classes{"a", "b"};
  const auto report = evaluate(dets, gts, classes);
  for (const auto* m : {&report.all, &report.classes[0], &report.classes[1]}) {
    CHECK(m->precision == 1.0);
    CHECK(m->recall == 1.0);
    CHECK(m->ap50 == 1.0);
    CHECK(m->ap50_95 == 1.0);
    for (double v : m->ap) CHECK(v == 1.0);
  }
}

TEST_CASE("hand-placed micro dataset") {
  GroundTruthSet gts;
  gts.images = {"a", "b", "c"};
  gts.boxes = {{"a", 0, {0, 0, 10, 10}}, {"a", 1, {20, 20, 10, 10}}, {"b", 0, {5, 5, 10, 10}},
               {"c", 1, {0, 0, 20, 20}}};
  const std::vector<Detection> dets{
      {"a", 0, {0, 0, 10, 10}, 0.9},    // TP
      {"a", 1, {22, 20, 10, 10}, 0.6},  // IoU 8/12: TP up to 0.65
      {"b", 0, {30, 30, 5, 5}, 0.8},    // FP
      {"c", 1, {0, 0, 20, 20}, 0.2},    // TP, below the confidence cutoff
  };
  const std::vector<std::string> classes{"x", "y"};
  const auto r = evaluate(dets, gts, classes);
  const auto& x = r.classes[0];
  const auto& y = r.classes[1];
  CHECK(x.tp == 1);
  CHECK(x.fp == 1);
  CHECK(x.fn == 1);
  CHECK(x.precision == 0.5);
  CHECK(x.recall == 0.5);
  // x: TP (0.9) then FP (0.8); recall reaches 0.5 at precision 1.
  CHECK(std::abs(x.ap50 - 51.0 / 101.0) < 1e-12);
  CHECK(std::abs(x.ap50_95 - 51.0 / 101.0) < 1e-12);
  CHECK(y.tp == 1);
  CHECK(y.fn == 1);
  CHECK(y.precision == 1.0);
  CHECK(y.recall == 0.5);
  CHECK(y.ap50 == 1.0);
  // y at thresholds >= 0.70 keeps only the exact box: recall 0.5 from the second detection, precision 1/2.
  CHECK(std::abs(y.ap[3] - 1.0) < 1e-12);
  CHECK(std::abs(y.ap[4] - 51.0 * 0.5 / 101.0) < 1e-12);
  CHECK(std::abs(r.all.ap50 - (x.ap50 + y.ap50) / 2) < 1e-12);
}

TEST_CASE("evaluate matches the naive reference on random micro datasets") {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = random_dataset(rng);
    const auto report = evaluate(m.dets, m.gts, m.classes);
    double sum50 = 0, sum5095 = 0, sum_p = 0;
    int included = 0;
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
      const auto ref = naive_class(m, static_cast<int>(c), 0.25);
      const auto& got = report.classes[c];
      for (int t = 0; t < 10; ++t) CHECK(std::abs(got.ap[t] - ref.ap[t]) < 1e-9);
      CHECK(std::abs(got.precision - ref.precision) < 1e-12);
      CHECK(std::abs(got.recall - ref.recall) < 1e-12);
      CHECK(got.ground_truth == ref.gt);
      CHECK(got.included == (ref.gt > 0 || ref.det > 0));

      CHECK(got.ap50_95 <= got.ap50 + 1e-12);
      for (int t = 1; t < 10; ++t) CHECK(got.ap[t] <= got.ap[t - 1] + 1e-12);
      for (double v : {got.precision, got.recall, got.ap50, got.ap50_95}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      if (got.included) {
        ++included;
        sum50 += got.ap50;
        sum5095 += got.ap50_95;
        sum_p += got.precision;
      }
    }
    if (included > 0) {
      CHECK(std::abs(report.all.ap50 - sum50 / included) < 1e-12);
      CHECK(std::abs(report.all.ap50_95 - sum5095 / included) < 1e-12);
      CHECK(std::abs(report.all.precision - sum_p / included) < 1e-12);
    }
  }
}

TEST_CASE("classes without ground truth") {
  GroundTruthSet gts;
  gts.images = {"a"};
  gts.boxes = {{"a", 0, {0, 0, 10, 10}}};
  const std::vector<std::string> classes{"seen", "phantom", "absent"};
  const std::vector<Detection> dets{{"a", 0, {0, 0, 10, 10}, 0.9}, {"a", 1, {0, 0, 10, 10}, 0.9}};
  const auto r = evaluate(dets, gts, classes);
  CHECK(r.classes[1].included);
  CHECK(r.classes[1].ap50 == 0.0);
  CHECK_FALSE(r.classes[2].included);
  CHECK(r.all.ap50 == 0.5);
}

TEST_CASE("evaluate rejects unknown images and classes") {
  GroundTruthSet gts;
  gts.images = {"a"};
  const std::vector<std::string> classes{"c"};
  CHECK_THROWS_AS(evaluate(std::vector<Detection>{{"zzz", 0, {0, 0, 1, 1}, 0.5}}, gts, classes), DataError);
  CHECK_THROWS_AS(evaluate(std::vector<Detection>{{"a", 3, {0, 0, 1, 1}, 0.5}}, gts, classes), DataError);
  gts.boxes = {{"b", 0, {0, 0, 1, 1}}};
  CHECK_THROWS_AS(evaluate(std::vector<Detection>{}, gts, classes), DataError);
}

TEST_CASE("report formatting") {
  GroundTruthSet gts;
  gts.images = {"a"};
  gts.boxes = {{"a", 0, {0, 0, 10, 10}}};
  const std::vector<std::string> classes{"Qualified", "NoHolder"};
  EvalOptions opts;
  opts.conf_threshold = 0.4;
  const auto r = evaluate(std::vector<Detection>{{"a", 0, {0, 0, 10, 10}, 0.9}}, gts, classes, opts);
  const std::string text = format_report(r);
  CHECK(text.find("101-point") != std::string::npos);
  CHECK(text.find("confidence >= 0.40") != std::string::npos);
  CHECK(text.find("All") < text.find("Qualified"));
  CHECK(text.find("(excluded)") != std::string::npos);

  const auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["classes"].size() == 2);
  CHECK(j["all"]["map50"] == 1.0);
  CHECK(j["iou_thresholds"].size() == 10);
  CHECK(j["conf_threshold"] == 0.4);
}

TEST_CASE("training iterations") {
  CHECK(training_iterations(414, 32, 100) == 1293.75);
  CHECK(training_iterations(32, 32, 1) == 1.0);
  CHECK(training_iterations(400, 32, 100) == 1250.0);
  CHECK_THROWS_AS(training_iterations(10, 0, 1), ValidationError);
}
