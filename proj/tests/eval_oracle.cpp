#include "eval_oracle.hpp"

#include <algorithm>

namespace synthasm::testing {

Box random_box(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> size(1.0, extent / 2);
  return {pos(rng), pos(rng), size(rng), size(rng)};
}

double brute_ap(std::vector<std::pair<double, bool>> scored, std::int64_t total_gt) {
  if (total_gt == 0) return scored.empty() ? 1.0 : 0.0;
  std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  std::vector<std::pair<double, double>> curve;  // (recall, precision) at each cutoff
  for (std::size_t k = 1; k <= scored.size(); ++k) {
    std::int64_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) tp += scored[i].second;
    curve.emplace_back(double(tp) / double(total_gt), double(tp) / double(k));
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    double p = 0.0;
    for (const auto& [rec, prec] : curve) {
      if (rec >= r / 100.0) p = std::max(p, prec);
    }
    sum += p;
  }
  return sum / 101.0;
}

MicroDataset random_dataset(std::mt19937_64& rng) {
  MicroDataset m;
  std::uniform_int_distribution<int> n_images(1, 5), n_classes(1, 3), n_boxes(0, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int images = n_images(rng);
  const int classes = n_classes(rng);
  for (int c = 0; c < classes; ++c) m.classes.push_back("class" + std::to_string(c));
  for (int i = 0; i < images; ++i) {
    const std::string name = "img" + std::to_string(i);
    m.gts.images.push_back(name);
    const int gt_count = n_boxes(rng);
    std::vector<GroundTruth> placed;
    for (int g = 0; g < gt_count; ++g) {
      const GroundTruth gt{name, static_cast<int>(rng() % classes), random_box(rng, 60.0)};
      placed.push_back(gt);
      m.gts.boxes.push_back(gt);
    }
    const int det_count = n_boxes(rng);
    for (int d = 0; d < det_count; ++d) {
      Detection det{name, static_cast<int>(rng() % classes), random_box(rng, 60.0), u(rng)};
      // Jitter a ground-truth box so a useful share of detections overlaps.
      if (!placed.empty() && u(rng) < 0.7) {
        const auto& base = placed[rng() % placed.size()];
        det.class_index = u(rng) < 0.85 ? base.class_index : det.class_index;
        det.box = {base.box.x + 6 * (u(rng) - 0.5), base.box.y + 6 * (u(rng) - 0.5), base.box.w * (0.8 + 0.4 * u(rng)),
                   base.box.h * (0.8 + 0.4 * u(rng))};
      }
      m.dets.push_back(det);
    }
  }
  return m;
}

double naive_iou(const Box& a, const Box& b) {
  const double x0 = std::max(a.x, b.x), x1 = std::min(a.x + a.w, b.x + b.w);
  const double y0 = std::max(a.y, b.y), y1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0.0;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

NaiveClass naive_class(const MicroDataset& m, int c, double conf) {
  NaiveClass out;
  for (const auto& g : m.gts.boxes) out.gt += g.class_index == c;
  for (const auto& d : m.dets) out.det += d.class_index == c;
  const auto run = [&](double thr, double min_conf, std::int64_t& tp, std::int64_t& fp) {
    std::vector<std::pair<double, bool>> scored;
    std::vector<std::string> names(m.gts.images);
    std::sort(names.begin(), names.end());
    for (const auto& img : names) {
      std::vector<Box> gts;
      for (const auto& g : m.gts.boxes) {
        if (g.image == img && g.class_index == c) gts.push_back(g.box);
      }
      std::vector<const Detection*> ds;
      for (const auto& d : m.dets) {
        if (d.image == img && d.class_index == c && d.confidence >= min_conf) ds.push_back(&d);
      }
      std::stable_sort(ds.begin(), ds.end(), [](auto* a, auto* b) { return a->confidence > b->confidence; });
      std::vector<bool> used(gts.size(), false);
      for (const auto* d : ds) {
        int pick = -1;
        double best = thr;
        for (std::size_t g = 0; g < gts.size(); ++g) {
          const double o = naive_iou(d->box, gts[g]);
          if (!used[g] && o >= best && (pick < 0 || o > best)) {
            best = o;
            pick = static_cast<int>(g);
          }
        }
        if (pick >= 0) used[pick] = true;
        scored.emplace_back(d->confidence, pick >= 0);
        (pick >= 0 ? tp : fp) += 1;
      }
    }
    return scored;
  };
  for (int t = 0; t < 10; ++t) {
    std::int64_t tp = 0, fp = 0;
    const auto scored = run(0.5 + 0.05 * t, -1.0, tp, fp);
    out.ap[t] = out.gt == 0 ? 0.0 : brute_ap(scored, out.gt);
  }
  std::int64_t tp = 0, fp = 0;
  run(0.5, conf, tp, fp);
  out.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  out.recall = out.gt > 0 ? double(tp) / double(out.gt) : 0.0;
  return out;
}

}  // namespace synthasm::testing
