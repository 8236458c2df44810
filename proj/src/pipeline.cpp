#include "synthasm/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "synthasm/error.hpp"
#include "synthasm/image_io.hpp"

namespace synthasm {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// Wraps nlohmann type errors from generated files into DataError.
template <typename Fn>
auto decode(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "' has an unexpected layout: " + e.what());
  }
}

ordered_json encode_stats(const InstanceStats& s, const std::vector<std::string>& categories) {
  ordered_json j;
  j["object_id"] = s.object_id;
  j["class_id"] = s.class_id;
  j["category"] = categories.at(static_cast<std::size_t>(s.class_id));
  j["bbox"] = {s.bbox.x, s.bbox.y, s.bbox.w, s.bbox.h};
  j["visible_pixels"] = s.visible_pixels;
  j["solo_pixels"] = s.solo_pixels;
  j["visibility"] = s.visibility;
  j["collided"] = s.collided;
  return j;
}

InstanceStats decode_stats(const json& j) {
  InstanceStats s;
  s.object_id = j.at("object_id").get<std::uint32_t>();
  s.class_id = j.at("class_id").get<int>();
  const auto bbox = j.at("bbox").get<std::array<int, 4>>();
  s.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
  s.visible_pixels = j.at("visible_pixels").get<std::int64_t>();
  s.solo_pixels = j.at("solo_pixels").get<std::int64_t>();
  s.visibility = j.at("visibility").get<double>();
  s.collided = j.at("collided").get<bool>();
  return s;
}

ordered_json encode_pose(const Pose& pose) {
  ordered_json j;
  j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  j["rotation"] = {pose.rotation.x(), pose.rotation.y(), pose.rotation.z()};
  return j;
}

std::vector<AnnotatedImage> read_instances(const fs::path& path) {
  const json root = read_json(path);
  return decode(path, [&] {
    std::vector<AnnotatedImage> images;
    for (const auto& img : root.at("images")) {
      AnnotatedImage a;
      a.image_id = img.at("image_id").get<int>();
      a.file_name = img.at("file_name").get<std::string>();
      a.width = img.at("width").get<int>();
      a.height = img.at("height").get<int>();
      for (const auto& obj : img.at("objects")) a.instances.push_back(decode_stats(obj));
      images.push_back(std::move(a));
    }
    return images;
  });
}

void move_file(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::rename(from, to, ec);
  if (ec) throw IoError("cannot move '" + from.string() + "' to '" + to.string() + "': " + ec.message());
}

std::uint64_t bounded(Rng& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

std::vector<std::string> sorted_stems(const fs::path& dir, const fs::path& skip) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt" && entry.path().filename() != skip) {
      files.push_back(entry.path().filename().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

Box to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

// 3x5 glyphs for digits, one row per 3-bit group, top row first.
constexpr std::array<std::uint16_t, 10> kDigitGlyphs = {
    0b111'101'101'101'111, 0b010'110'010'010'111, 0b111'001'111'100'111, 0b111'001'111'001'111,
    0b101'101'111'001'001, 0b111'100'111'001'111, 0b111'100'111'101'111, 0b111'001'010'010'010,
    0b111'101'111'101'111, 0b111'101'111'001'111};

void draw_number(RgbImage& image, int x, int y, int value, const std::array<std::uint8_t, 3>& color) {
  const std::string digits = std::to_string(value);
  constexpr int kScale = 2;
  for (std::size_t d = 0; d < digits.size(); ++d) {
    const std::uint16_t glyph = kDigitGlyphs[static_cast<std::size_t>(digits[d] - '0')];
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 3; ++col) {
        if (!((glyph >> (14 - (row * 3 + col))) & 1)) continue;
        for (int sy = 0; sy < kScale; ++sy) {
          for (int sx = 0; sx < kScale; ++sx) {
            const int px = x + static_cast<int>(d) * 4 * kScale + col * kScale + sx;
            const int py = y + row * kScale + sy;
            if (px >= 0 && py >= 0 && px < image.width && py < image.height) image.set(px, py, color[0], color[1], color[2]);
          }
        }
      }
    }
  }
}

std::array<std::uint8_t, 3> class_color(int class_index) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> palette = {
      {{255, 64, 64}, {64, 255, 64}, {64, 128, 255}, {255, 255, 0}, {255, 0, 255}, {0, 255, 255}}};
  return palette[static_cast<std::size_t>(class_index) % palette.size()];
}

}  // namespace

std::string image_file_name(const PipelineConfig& config, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d", index);
  return config.image_prefix + buf + ".ppm";
}

int worker_threads() {
  if (const char* env = std::getenv("SYNTHASM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

RenderedImage render_image(const PipelineConfig& config, int index) {
  RenderedImage out;
  out.scene = build_scene(config.scene, config.seed, index);
  out.render = rasterize(out.scene, config.camera, config.lights, config.ambient, config.render);
  std::map<std::uint32_t, std::int64_t> solo;
  for (const auto& obj : out.scene.objects) {
    if (obj.active) solo[obj.id] = solo_pixel_count(out.scene, config.camera, obj.id, config.render);
  }
  out.annotations.image_id = index + 1;
  out.annotations.file_name = image_file_name(config, index);
  out.annotations.width = config.camera.width;
  out.annotations.height = config.camera.height;
  out.annotations.instances = extract_instances(out.render, out.scene, solo);
  return out;
}

GenerateSummary cmd_generate(const fs::path& config_path, const GenerateOptions& options) {
  return generate(load_config(config_path), options);
}

GenerateSummary generate(const PipelineConfig& base, const GenerateOptions& options) {
  PipelineConfig config = base;
  if (options.seed) config.seed = *options.seed;
  if (options.count) {
    if (*options.count < 1) throw ValidationError("config image_count: must be at least 1");
    config.image_count = *options.count;
  }
  const fs::path out = options.out ? *options.out : config.output_dir;

  make_dirs(out);
  for (const char* stale : {kImagesDir, kIdsDir, kQuarantineDir, kInspectDir}) fs::remove_all(out / stale);
  for (const char* stale : {kCocoFile, kSplitFile}) fs::remove(out / stale);
  make_dirs(out / kImagesDir);
  if (options.dump_ids) make_dirs(out / kIdsDir);

  const int n = config.image_count;
  std::vector<AnnotatedImage> images(static_cast<std::size_t>(n));
  std::vector<Scene> scenes(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        RenderedImage r = render_image(config, i);
        write_ppm((out / kImagesDir / r.annotations.file_name).string(),
                  {r.render.width, r.render.height, std::move(r.render.rgb)});
        if (options.dump_ids) {
          GrayImage16 ids{r.render.width, r.render.height, {}};
          ids.pixels.reserve(r.render.instance_ids.size());
          for (const auto id : r.render.instance_ids) {
            if (id > 0xFFFF) throw DataError("instance id does not fit a 16-bit PGM");
            ids.pixels.push_back(static_cast<std::uint16_t>(id));
          }
          write_pgm16((out / kIdsDir / (image_stem(r.annotations.file_name) + ".pgm")).string(), ids);
        }
        images[static_cast<std::size_t>(i)] = std::move(r.annotations);
        scenes[static_cast<std::size_t>(i)] = std::move(r.scene);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int threads = std::clamp(options.threads > 0 ? options.threads : worker_threads(), 1, n);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  GenerateSummary summary;
  summary.out_dir = out;
  summary.images = n;

  ordered_json instances;
  instances["images"] = ordered_json::array();
  std::vector<AnnotatedImage> visible(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const AnnotatedImage& img = images[i];
    ordered_json j;
    j["image_id"] = img.image_id;
    j["file_name"] = img.file_name;
    j["width"] = img.width;
    j["height"] = img.height;
    j["scene_seed"] = scenes[i].rng_seed;
    j["objects"] = ordered_json::array();
    for (const auto& s : img.instances) {
      ordered_json o = encode_stats(s, config.category_names);
      o["pose"] = encode_pose(scenes[i].find(s.object_id)->pose);
      j["objects"].push_back(std::move(o));
    }
    instances["images"].push_back(std::move(j));

    visible[i] = {img.image_id, img.file_name, img.width, img.height, {}};
    for (const auto& s : img.instances) {
      if (s.visible_pixels > 0) visible[i].instances.push_back(s);
    }
    summary.annotations += static_cast<std::int64_t>(visible[i].instances.size());
  }
  write_text(out / kInstancesFile, instances.dump(2) + "\n");
  write_text(out / kRawCocoFile, write_coco(visible, config.category_names));

  ordered_json manifest;
  manifest["generator"] = "synthasm";
  manifest["format_version"] = 1;
  manifest["config_hash"] = config.hash;
  manifest["seed"] = config.seed;
  manifest["image_count"] = n;
  manifest["image_size"] = {config.camera.width, config.camera.height};
  manifest["categories"] = config.category_names;
  manifest["postprocess_defaults"] = {{"min_visibility", config.postprocess.min_visibility},
                                      {"min_pixels", config.postprocess.min_pixels}};
  manifest["images"] = ordered_json::array();
  for (const auto& img : images) manifest["images"].push_back(img.file_name);
  manifest["postprocess"] = nullptr;
  write_text(out / kManifestFile, manifest.dump(2) + "\n");
  return summary;
}

PostprocessSummary cmd_postprocess(const fs::path& dataset, const PostprocessOptions& options) {
  const fs::path manifest_path = dataset / kManifestFile;
  if (!fs::exists(manifest_path)) throw IoError("missing manifest '" + manifest_path.string() + "'; run generate first");
  json manifest = read_json(manifest_path);

  PostprocessSummary summary;
  std::vector<std::string> categories;
  decode(manifest_path, [&] {
    const json& defaults = manifest.at("postprocess_defaults");
    summary.thresholds.min_visibility = defaults.at("min_visibility").get<double>();
    summary.thresholds.min_pixels = defaults.at("min_pixels").get<std::int64_t>();
    categories = manifest.at("categories").get<std::vector<std::string>>();
    return 0;
  });
  if (options.min_visibility) summary.thresholds.min_visibility = *options.min_visibility;
  if (options.min_pixels) summary.thresholds.min_pixels = *options.min_pixels;
  if (!(summary.thresholds.min_visibility >= 0.0 && summary.thresholds.min_visibility <= 1.0)) {
    throw ValidationError("--min-visibility must lie in [0,1]");
  }
  if (summary.thresholds.min_pixels < 0) throw ValidationError("--min-pixels must be nonnegative");

  const std::vector<AnnotatedImage> images = read_instances(dataset / kInstancesFile);
  make_dirs(dataset / kQuarantineDir);
  std::vector<AnnotatedImage> kept;
  for (const auto& img : images) {
    const FilterResult r = filter_instances(img.instances, summary.thresholds);
    summary.kept += static_cast<std::int64_t>(r.kept.size());
    summary.removed += static_cast<std::int64_t>(r.removed.size());
    const fs::path live = dataset / kImagesDir / img.file_name;
    const fs::path parked = dataset / kQuarantineDir / img.file_name;
    if (r.drop_image) {
      summary.dropped_images.push_back(img.file_name);
      if (fs::exists(live)) move_file(live, parked);
    } else {
      if (!fs::exists(live) && fs::exists(parked)) move_file(parked, live);
      kept.push_back({img.image_id, img.file_name, img.width, img.height, r.kept});
    }
  }
  write_text(dataset / kCocoFile, write_coco(kept, categories));

  ordered_json record;
  record["min_visibility"] = summary.thresholds.min_visibility;
  record["min_pixels"] = summary.thresholds.min_pixels;
  record["kept_annotations"] = summary.kept;
  record["removed_annotations"] = summary.removed;
  record["dropped_images"] = summary.dropped_images;
  // Re-emit in the original key order.
  ordered_json out = ordered_json::parse(read_text(manifest_path));
  out["postprocess"] = record;
  write_text(manifest_path, out.dump(2) + "\n");
  return summary;
}

ConvertSummary cmd_convert(const fs::path& coco_path, const fs::path& out_dir) {
  const CocoDataset coco = parse_coco(read_text(coco_path));
  const YoloConversion yolo = coco_to_yolo(coco);
  make_dirs(out_dir);

  ConvertSummary summary;
  summary.warnings = yolo.warnings;
  std::set<std::string> stems;
  for (const auto& [file, records] : yolo.files) {
    const std::string stem = image_stem(file);
    if (stem == "classes" || !stems.insert(stem).second) {
      throw DataError("image '" + file + "' maps to a label file name that is already taken");
    }
    write_text(out_dir / (stem + ".txt"), format_yolo(records));
    ++summary.files;
  }
  std::string classes;
  for (const auto& c : yolo.classes) classes += c.name + "\n";
  write_text(out_dir / "classes.txt", classes);
  return summary;
}

SplitManifest split_images(std::vector<std::string> images, const SplitRequest& request) {
  if (request.counts.has_value() == request.fractions.has_value()) {
    throw ValidationError("split needs either counts or fractions");
  }
  const auto pool = static_cast<std::int64_t>(images.size());
  std::array<std::int64_t, 3> counts{};
  if (request.counts) {
    counts = *request.counts;
    for (const auto c : counts) {
      if (c < 0) throw ValidationError("split counts must be nonnegative");
    }
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double f = (*request.fractions)[i];
      if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0,1]");
      total += f;
      counts[i] = static_cast<std::int64_t>(std::floor(f * double(pool) + 1e-9));
    }
    if (total > 1.0 + 1e-9) throw ValidationError("split fractions sum to more than 1");
    if (std::abs(total - 1.0) <= 1e-9) counts[0] += pool - (counts[0] + counts[1] + counts[2]);
  }
  const std::int64_t requested = counts[0] + counts[1] + counts[2];
  if (requested > pool) {
    throw ValidationError("split requests " + std::to_string(requested) + " images but only " + std::to_string(pool) +
                          " are available");
  }

  std::sort(images.begin(), images.end());
  Rng rng(request.seed);
  for (std::size_t i = images.size(); i > 1; --i) {
    std::swap(images[i - 1], images[bounded(rng, i)]);
  }

  SplitManifest manifest;
  manifest.seed = request.seed;
  auto it = images.begin();
  const auto take = [&](std::int64_t n, std::vector<std::string>& subset) {
    subset.assign(it, it + n);
    it += n;
  };
  take(counts[0], manifest.train);
  take(counts[1], manifest.val);
  take(counts[2], manifest.test);
  return manifest;
}

SplitManifest cmd_split(const fs::path& dataset, const SplitRequest& request) {
  std::vector<std::string> pool;
  if (fs::exists(dataset / kCocoFile)) {
    for (const auto& img : parse_coco(read_text(dataset / kCocoFile)).images) pool.push_back(img.file_name);
  } else {
    const fs::path manifest_path = dataset / kManifestFile;
    if (!fs::exists(manifest_path)) throw IoError("'" + dataset.string() + "' holds neither annotations nor a manifest");
    const json manifest = read_json(manifest_path);
    decode(manifest_path, [&] {
      std::set<std::string> dropped;
      if (manifest.contains("postprocess") && !manifest["postprocess"].is_null()) {
        for (const auto& d : manifest["postprocess"].at("dropped_images")) dropped.insert(d.get<std::string>());
      }
      for (const auto& f : manifest.at("images")) {
        if (!dropped.count(f.get<std::string>())) pool.push_back(f.get<std::string>());
      }
      return 0;
    });
  }

  SplitManifest split = split_images(std::move(pool), request);
  ordered_json j;
  j["seed"] = split.seed;
  j["counts"] = {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  write_text(dataset / kSplitFile, j.dump(2) + "\n");
  const auto list = [&](const char* name, const std::vector<std::string>& subset) {
    std::string text;
    for (const auto& f : subset) text += std::string(kImagesDir) + "/" + f + "\n";
    write_text(dataset / (std::string(name) + ".txt"), text);
  };
  list("train", split.train);
  list("val", split.val);
  list("test", split.test);
  return split;
}

EvaluateResult cmd_evaluate(const fs::path& gt_path, const fs::path& det_path, const EvaluateOptions& options) {
  GroundTruthSet gts;
  std::vector<Detection> dets;
  std::vector<std::string> categories;

  if (options.format == AnnotationFormat::Coco) {
    const CocoDataset coco = parse_coco(read_text(gt_path));
    std::vector<CocoCategory> sorted = coco.categories;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::map<int, int> class_of;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      class_of[sorted[i].id] = static_cast<int>(i);
      categories.push_back(sorted[i].name);
    }
    std::map<int, std::string> image_of;
    for (const auto& img : coco.images) {
      image_of[img.id] = img.file_name;
      gts.images.push_back(img.file_name);
    }
    for (const auto& a : coco.annotations) {
      gts.boxes.push_back({image_of.at(a.image_id), class_of.at(a.category_id), to_box(a.bbox)});
    }

    const json results = read_json(det_path);
    if (!results.is_array()) throw DataError("detections must be a COCO results array");
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::string where = "detection " + std::to_string(i);
      decode(det_path, [&] {
        const json& r = results[i];
        const int image_id = r.at("image_id").get<int>();
        const int category_id = r.at("category_id").get<int>();
        const auto bbox = r.at("bbox").get<std::array<double, 4>>();
        const double score = r.at("score").get<double>();
        const auto image = image_of.find(image_id);
        if (image == image_of.end()) throw DataError(where + " references image id " + std::to_string(image_id) + " absent from the ground truth");
        const auto cls = class_of.find(category_id);
        if (cls == class_of.end()) throw DataError(where + " references unknown category " + std::to_string(category_id));
        if (!(score >= 0.0 && score <= 1.0)) throw DataError(where + " has a score outside [0,1]");
        dets.push_back({image->second, cls->second, to_box(bbox), score});
        return 0;
      });
    }
  } else {
    std::istringstream names(read_text(gt_path / "classes.txt"));
    for (std::string line; std::getline(names, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) categories.push_back(line);
    }
    const int num_classes = static_cast<int>(categories.size());
    const auto load = [&](const fs::path& file, bool detections) {
      const std::string image = image_stem(file.filename().string());
      std::vector<YoloBox> boxes;
      try {
        boxes = parse_yolo(read_text(file), options.width, options.height, num_classes);
      } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
      }
      for (const auto& b : boxes) {
        if (detections) {
          if (!b.confidence) throw DataError(file.string() + ": detection lines need a confidence column");
          dets.push_back({image, b.class_index, to_box(b.bbox), *b.confidence});
        } else {
          if (b.confidence) throw DataError(file.string() + ": ground-truth lines must not carry a confidence");
          gts.boxes.push_back({image, b.class_index, to_box(b.bbox)});
        }
      }
    };
    std::set<std::string> known;
    for (const auto& file : sorted_stems(gt_path, "classes.txt")) {
      gts.images.push_back(image_stem(file));
      known.insert(image_stem(file));
      load(gt_path / file, false);
    }
    for (const auto& file : sorted_stems(det_path, "classes.txt")) {
      if (!known.count(image_stem(file))) {
        throw DataError("detections for '" + image_stem(file) + "' have no ground-truth file");
      }
      load(det_path / file, true);
    }
  }

  EvaluateResult result;
  result.report = evaluate(dets, gts, categories, options.eval);
  result.text = format_report(result.report);
  if (options.json_out) write_text(*options.json_out, report_json(result.report));
  return result;
}

void draw_rectangle(RgbImage& image, int x, int y, int w, int h, const std::array<std::uint8_t, 3>& color) {
  const auto plot = [&](int px, int py) {
    if (px >= 0 && py >= 0 && px < image.width && py < image.height) image.set(px, py, color[0], color[1], color[2]);
  };
  for (int i = x; i < x + w; ++i) {
    plot(i, y);
    plot(i, y + h - 1);
  }
  for (int j = y; j < y + h; ++j) {
    plot(x, j);
    plot(x + w - 1, j);
  }
}

InspectResult cmd_inspect(const fs::path& dataset, const std::string& image_name) {
  const fs::path manifest_path = dataset / kManifestFile;
  if (!fs::exists(manifest_path)) throw IoError("missing manifest '" + manifest_path.string() + "'");
  const json manifest = read_json(manifest_path);
  if (manifest.contains("postprocess") && manifest["postprocess"].is_object()) {
    for (const auto& d : manifest["postprocess"].value("dropped_images", json::array())) {
      if (d.get<std::string>() == image_name) throw ValidationError("image was removed by postprocess: " + image_name);
    }
  }
  const fs::path image_path = dataset / kImagesDir / image_name;
  if (!fs::exists(image_path)) throw ValidationError("unknown image '" + image_name + "'");

  InspectResult result;
  const fs::path coco_path = fs::exists(dataset / kCocoFile) ? dataset / kCocoFile : dataset / kRawCocoFile;
  const CocoDataset coco = parse_coco(read_text(coco_path));
  std::map<int, int> class_of;
  {
    std::vector<int> ids;
    for (const auto& c : coco.categories) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) class_of[ids[i]] = static_cast<int>(i);
  }

  RgbImage image = read_ppm(image_path.string());
  std::ostringstream summary;
  summary << image_name << " (" << image.width << "x" << image.height << ")\n";
  const CocoImage* entry = coco.find_image(image_name);
  if (entry == nullptr) {
    result.warnings.push_back("no annotations recorded for '" + image_name + "' in " + coco_path.filename().string());
  } else {
    for (const auto& a : coco.annotations) {
      if (a.image_id != entry->id) continue;
      const int cls = class_of.at(a.category_id);
      const auto color = class_color(cls);
      const int x = static_cast<int>(std::lround(a.bbox[0]));
      const int y = static_cast<int>(std::lround(a.bbox[1]));
      draw_rectangle(image, x, y, static_cast<int>(std::lround(a.bbox[2])), static_cast<int>(std::lround(a.bbox[3])),
                     color);
      draw_number(image, x + 2, y >= 12 ? y - 12 : y + 2, cls, color);
      ++result.boxes;
    }
  }

  if (fs::exists(dataset / kInstancesFile)) {
    for (const auto& img : read_instances(dataset / kInstancesFile)) {
      if (img.file_name != image_name) continue;
      char line[256];
      for (const auto& s : img.instances) {
        std::snprintf(line, sizeof line,
                      "  object %u class %d bbox [%d %d %d %d] visible %lld solo %lld visibility %.3f%s\n",
                      s.object_id, s.class_id, s.bbox.x, s.bbox.y, s.bbox.w, s.bbox.h,
                      static_cast<long long>(s.visible_pixels), static_cast<long long>(s.solo_pixels), s.visibility,
                      s.collided ? " collided" : "");
        summary << line;
      }
    }
  }
  summary << result.boxes << " annotation box(es) drawn\n";
  result.summary = summary.str();

  make_dirs(dataset / kInspectDir);
  result.preview = dataset / kInspectDir / (image_stem(image_name) + "_preview.ppm");
  write_ppm(result.preview.string(), image);
  return result;
}

}  // namespace synthasm
