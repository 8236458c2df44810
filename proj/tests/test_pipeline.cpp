#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "synthasm/error.hpp"
#include "synthasm/pipeline.hpp"
#include "test_support.hpp"

using namespace synthasm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

PipelineConfig small_config(int count = 4, std::uint64_t seed = 7) {
  PipelineConfig cfg = load_config(testing::example_config());
  cfg.camera.width = 160;
  cfg.camera.height = 160;
  cfg.image_count = count;
  cfg.seed = seed;
  return cfg;
}

// Relative file path -> contents for every regular file under `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return files;
}

std::vector<std::string> names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("img_" + std::to_string(100000 + i) + ".ppm");
  return out;
}

json example_json() { return json::parse(slurp(testing::example_config())); }

std::string parse_error(const json& j) {
  try {
    parse_config(j.dump(), testing::source_dir() / "configs");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("generate is byte-for-byte reproducible") {
  const auto a = testing::temp_dir("gen_a");
  const auto b = testing::temp_dir("gen_b");
  const auto cfg = small_config(5, 7);
  GenerateOptions opt;
  opt.out = a;
  opt.threads = 3;
  const auto sa = generate(cfg, opt);
  opt.out = b;
  opt.threads = 1;
  const auto sb = generate(cfg, opt);
  CHECK(sa.images == 5);
  CHECK(sa.annotations == sb.annotations);
  const auto fa = snapshot(a);
  CHECK(fa == snapshot(b));
  CHECK(fa.count("images/img_00004.ppm") == 1);
  CHECK(fa.count("manifest.json") == 1);

  const json manifest = json::parse(fa.at("manifest.json"));
  CHECK(manifest["image_count"] == 5);
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["postprocess"].is_null());
  CHECK(manifest["categories"].size() == cfg.category_names.size());
}

TEST_CASE("a different seed changes the images") {
  const auto a = testing::temp_dir("seed_a");
  const auto b = testing::temp_dir("seed_b");
  GenerateOptions opt;
  opt.out = a;
  generate(small_config(1, 1), opt);
  opt.out = b;
  generate(small_config(1, 2), opt);
  CHECK(slurp(a / "images/img_00000.ppm") != slurp(b / "images/img_00000.ppm"));
}

TEST_CASE("generate rejects a nonpositive count") {
  GenerateOptions opt;
  opt.out = testing::temp_dir("gen_zero");
  opt.count = 0;
  try {
    generate(small_config(), opt);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("image_count") != std::string::npos);
  }
}

TEST_CASE("config errors name the offending field") {
  json j = example_json();
  j["image_count"] = 0;
  CHECK(parse_error(j).find("image_count") != std::string::npos);

  j = example_json();
  j["camera"]["fov"] = -1.0;
  CHECK(parse_error(j).find("camera") != std::string::npos);

  j = example_json();
  j["surprise"] = 1;
  CHECK(parse_error(j).find("surprise") != std::string::npos);

  j = example_json();
  j["randomization"]["x"] = {1.0, 0.0};
  CHECK(parse_error(j).find("randomization.x") != std::string::npos);

  CHECK_THROWS_AS(parse_config("{not json", "."), ValidationError);
  CHECK_THROWS_AS(load_config(testing::temp_dir("nocfg") / "missing.json"), IoError);
}

TEST_CASE("the config hash covers the file bytes") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  const auto cfg = load_config(testing::example_config());
  CHECK(cfg.hash == fnv1a_hex(slurp(testing::example_config())));
}

TEST_CASE("postprocess needs a generated dataset") {
  CHECK_THROWS_AS(cmd_postprocess(testing::temp_dir("pp_empty")), IoError);
}

TEST_CASE("postprocess quarantines dropped images and is idempotent") {
  const auto dir = testing::temp_dir("pp");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(6, 11), opt);

  // Pick a pixel threshold that keeps some images and drops others.
  const json instances = json::parse(slurp(dir / kInstancesFile));
  std::vector<std::int64_t> best;
  for (const auto& img : instances["images"]) {
    std::int64_t m = 0;
    for (const auto& o : img["objects"]) {
      if (!o["collided"].get<bool>()) m = std::max(m, o["visible_pixels"].get<std::int64_t>());
    }
    best.push_back(m);
  }
  std::vector<std::int64_t> sorted = best;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(sorted.front() < sorted.back());
  PostprocessOptions strict;
  strict.min_visibility = 0.0;
  strict.min_pixels = sorted.back();

  const auto first = cmd_postprocess(dir, strict);
  const auto files_after_first = snapshot(dir);
  std::set<std::string> expected_drop;
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (best[i] < strict.min_pixels) expected_drop.insert(instances["images"][i]["file_name"].get<std::string>());
  }
  CHECK(std::set<std::string>(first.dropped_images.begin(), first.dropped_images.end()) == expected_drop);
  for (const auto& name : expected_drop) {
    CHECK(fs::exists(dir / kQuarantineDir / name));
    CHECK_FALSE(fs::exists(dir / kImagesDir / name));
  }

  const json manifest = json::parse(slurp(dir / kManifestFile));
  CHECK(manifest["postprocess"]["min_pixels"] == strict.min_pixels);
  CHECK(manifest["postprocess"]["dropped_images"].size() == expected_drop.size());
  CHECK(manifest["postprocess"]["kept_annotations"] == first.kept);

  const CocoDataset coco = parse_coco(slurp(dir / kCocoFile));
  CHECK(coco.images.size() == best.size() - expected_drop.size());
  CHECK(static_cast<std::int64_t>(coco.annotations.size()) == first.kept);
  for (const auto& a : coco.annotations) CHECK(a.bbox[2] * a.bbox[3] >= double(*strict.min_pixels) - 1e-9);

  const auto second = cmd_postprocess(dir, strict);
  CHECK(second.dropped_images == first.dropped_images);
  CHECK(snapshot(dir) == files_after_first);

  // Looser thresholds bring quarantined images back.
  PostprocessOptions loose;
  loose.min_visibility = 0.0;
  loose.min_pixels = 0;
  cmd_postprocess(dir, loose);
  for (const auto& name : expected_drop) {
    const bool live = fs::exists(dir / kImagesDir / name);
    const bool parked = fs::exists(dir / kQuarantineDir / name);
    CHECK(live != parked);
  }
}

TEST_CASE("postprocess rejects out-of-range thresholds") {
  const auto dir = testing::temp_dir("pp_bad");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(1), opt);
  PostprocessOptions bad;
  bad.min_visibility = 1.5;
  CHECK_THROWS_AS(cmd_postprocess(dir, bad), ValidationError);
  bad.min_visibility.reset();
  bad.min_pixels = -1;
  CHECK_THROWS_AS(cmd_postprocess(dir, bad), ValidationError);
}

TEST_CASE("convert writes one label file per image plus classes") {
  const auto dir = testing::temp_dir("conv");
  GenerateOptions opt;
  opt.out = dir;
  const auto cfg = small_config(3, 5);
  generate(cfg, opt);
  cmd_postprocess(dir);
  const auto summary = cmd_convert(dir / kCocoFile, dir / "labels");
  const CocoDataset coco = parse_coco(slurp(dir / kCocoFile));
  CHECK(summary.files == coco.images.size());

  std::string classes;
  for (const auto& n : cfg.category_names) classes += n + "\n";
  CHECK(slurp(dir / "labels/classes.txt") == classes);

  std::size_t lines = 0;
  for (const auto& img : coco.images) {
    const auto text = slurp(dir / "labels" / (image_stem(img.file_name) + ".txt"));
    lines += parse_yolo(text, img.width, img.height, static_cast<int>(cfg.category_names.size())).size();
  }
  CHECK(lines == coco.annotations.size());
  CHECK_THROWS_AS(cmd_convert(dir / "absent.json", dir / "x"), IoError);
}

TEST_CASE("split sizes from counts and fractions") {
  SplitRequest counts;
  counts.counts = std::array<std::int64_t, 3>{400, 101, 0};
  counts.seed = 3;
  const auto m = split_images(names(515), counts);
  CHECK(m.train.size() == 400);
  CHECK(m.val.size() == 101);
  CHECK(m.test.empty());

  SplitRequest larger;
  larger.counts = std::array<std::int64_t, 3>{414, 128, 0};
  const auto p = split_images(names(542), larger);
  CHECK(p.train.size() == 414);
  CHECK(p.val.size() == 128);

  SplitRequest all_train;
  all_train.fractions = std::array<double, 3>{1.0, 0.0, 0.0};
  CHECK(split_images(names(37), all_train).train.size() == 37);

  SplitRequest thirds;
  thirds.fractions = std::array<double, 3>{0.7, 0.2, 0.1};
  const auto t = split_images(names(101), thirds);
  CHECK(t.val.size() == 20);
  CHECK(t.test.size() == 10);
  CHECK(t.train.size() == 71);

  SplitRequest partial;
  partial.fractions = std::array<double, 3>{0.5, 0.25, 0.0};
  const auto q = split_images(names(10), partial);
  CHECK(q.train.size() == 5);
  CHECK(q.val.size() == 2);
}

TEST_CASE("split rejects impossible requests") {
  SplitRequest over;
  over.counts = std::array<std::int64_t, 3>{400, 101, 0};
  CHECK_THROWS_AS(split_images(names(500), over), ValidationError);

  SplitRequest neither;
  CHECK_THROWS_AS(split_images(names(5), neither), ValidationError);
  SplitRequest both;
  both.counts = std::array<std::int64_t, 3>{1, 0, 0};
  both.fractions = std::array<double, 3>{1, 0, 0};
  CHECK_THROWS_AS(split_images(names(5), both), ValidationError);

  SplitRequest big;
  big.fractions = std::array<double, 3>{0.8, 0.3, 0.0};
  CHECK_THROWS_AS(split_images(names(5), big), ValidationError);
  SplitRequest negative;
  negative.counts = std::array<std::int64_t, 3>{-1, 0, 0};
  CHECK_THROWS_AS(split_images(names(5), negative), ValidationError);
}

TEST_CASE("split subsets are disjoint, seeded and order independent") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SplitRequest r;
    r.counts = std::array<std::int64_t, 3>{std::int64_t(seed % 7), 3, std::int64_t(seed % 4)};
    r.seed = seed;
    auto pool = names(20);
    const auto a = split_images(pool, r);
    std::reverse(pool.begin(), pool.end());
    const auto b = split_images(pool, r);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);

    std::set<std::string> seen;
    for (const auto* subset : {&a.train, &a.val, &a.test}) {
      for (const auto& n : *subset) CHECK(seen.insert(n).second);
    }
    CHECK(seen.size() == a.train.size() + a.val.size() + a.test.size());
  }
  SplitRequest r;
  r.counts = std::array<std::int64_t, 3>{10, 0, 0};
  r.seed = 1;
  const auto x = split_images(names(20), r);
  r.seed = 2;
  CHECK(x.train != split_images(names(20), r).train);
}

TEST_CASE("cmd_split writes the manifest and list files") {
  const auto dir = testing::temp_dir("split");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(4, 3), opt);
  SplitRequest r;
  r.counts = std::array<std::int64_t, 3>{2, 1, 1};
  r.seed = 9;
  const auto m = cmd_split(dir, r);
  const json j = json::parse(slurp(dir / kSplitFile));
  CHECK(j["seed"] == 9);
  CHECK(j["train"].get<std::vector<std::string>>() == m.train);
  CHECK(slurp(dir / "val.txt") == std::string(kImagesDir) + "/" + m.val[0] + "\n");
  r.counts = std::array<std::int64_t, 3>{4, 1, 0};
  CHECK_THROWS_AS(cmd_split(dir, r), ValidationError);
  CHECK_THROWS_AS(cmd_split(testing::temp_dir("split_empty"), r), IoError);
}

TEST_CASE("evaluate in COCO mode scores ground truth as perfect") {
  const auto dir = testing::temp_dir("eval_coco");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(3, 21), opt);
  cmd_postprocess(dir);
  const CocoDataset coco = parse_coco(slurp(dir / kCocoFile));
  REQUIRE_FALSE(coco.annotations.empty());

  json results = json::array();
  for (const auto& a : coco.annotations) {
    results.push_back({{"image_id", a.image_id}, {"category_id", a.category_id}, {"bbox", a.bbox}, {"score", 0.9}});
  }
  spit(dir / "dets.json", results.dump());
  EvaluateOptions eo;
  eo.json_out = dir / "report.json";
  const auto r = cmd_evaluate(dir / kCocoFile, dir / "dets.json", eo);
  CHECK(r.report.all.ap50 == doctest::Approx(1.0));
  CHECK(r.report.all.ap50_95 == doctest::Approx(1.0));
  CHECK(r.report.all.fp == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(r.text.find("All") != std::string::npos);

  json bad = results;
  bad[0]["image_id"] = 99999;
  spit(dir / "bad.json", bad.dump());
  CHECK_THROWS_AS(cmd_evaluate(dir / kCocoFile, dir / "bad.json"), DataError);
  bad = results;
  bad[0]["score"] = 2.0;
  spit(dir / "bad.json", bad.dump());
  CHECK_THROWS_AS(cmd_evaluate(dir / kCocoFile, dir / "bad.json"), DataError);
  spit(dir / "bad.json", "{}");
  CHECK_THROWS_AS(cmd_evaluate(dir / kCocoFile, dir / "bad.json"), DataError);
}

TEST_CASE("evaluate in YOLO mode") {
  const auto dir = testing::temp_dir("eval_yolo");
  fs::create_directories(dir / "gt");
  fs::create_directories(dir / "det");
  spit(dir / "gt/classes.txt", "a\nb\n");
  spit(dir / "gt/img_1.txt", "0 0.5 0.5 0.25 0.25\n1 0.2 0.2 0.1 0.1\n");
  spit(dir / "gt/img_2.txt", "");
  spit(dir / "det/img_1.txt", "0 0.5 0.5 0.25 0.25 0.8\n1 0.8 0.8 0.1 0.1 0.6\n");
  EvaluateOptions eo;
  eo.format = AnnotationFormat::Yolo;
  eo.width = 100;
  eo.height = 100;
  const auto r = cmd_evaluate(dir / "gt", dir / "det", eo);
  REQUIRE(r.report.classes.size() == 2);
  CHECK(r.report.classes[0].ap50 == doctest::Approx(1.0));
  CHECK(r.report.classes[1].ap50 == 0.0);
  CHECK(r.report.classes[1].fp == 1);
  CHECK(r.report.all.ap50 == doctest::Approx(0.5));

  spit(dir / "det/img_3.txt", "0 0.5 0.5 0.1 0.1 0.5\n");
  CHECK_THROWS_AS(cmd_evaluate(dir / "gt", dir / "det", eo), DataError);
  fs::remove(dir / "det/img_3.txt");
  spit(dir / "det/img_2.txt", "0 0.5 0.5 0.1 0.1\n");
  CHECK_THROWS_AS(cmd_evaluate(dir / "gt", dir / "det", eo), DataError);
}

TEST_CASE("inspect draws the annotation boxes") {
  const auto dir = testing::temp_dir("inspect");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(2, 4), opt);
  const CocoDataset raw = parse_coco(slurp(dir / kRawCocoFile));
  const std::string name = "img_00000.ppm";
  const auto r = cmd_inspect(dir, name);
  CHECK(fs::exists(r.preview));
  CHECK(r.warnings.empty());

  std::size_t expected = 0;
  const CocoImage* entry = raw.find_image(name);
  REQUIRE(entry != nullptr);
  for (const auto& a : raw.annotations) expected += a.image_id == entry->id;
  CHECK(r.boxes == expected);
  if (expected > 0) CHECK(slurp(r.preview) != slurp(dir / kImagesDir / name));

  CHECK_THROWS_AS(cmd_inspect(dir, "nope.ppm"), ValidationError);
  CHECK_THROWS_AS(cmd_inspect(testing::temp_dir("inspect_empty"), name), IoError);
}

TEST_CASE("inspect reports dropped and unannotated images") {
  const auto dir = testing::temp_dir("inspect_drop");
  GenerateOptions opt;
  opt.out = dir;
  generate(small_config(2, 4), opt);
  PostprocessOptions all_out;
  all_out.min_pixels = 1 << 30;
  const auto pp = cmd_postprocess(dir, all_out);
  REQUIRE(pp.dropped_images.size() == 2);
  try {
    cmd_inspect(dir, pp.dropped_images[0]);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("image was removed by postprocess") != std::string::npos);
  }

  // Annotation file without an entry for a present image.
  cmd_postprocess(dir, PostprocessOptions{0.0, 0});
  spit(dir / kCocoFile, write_coco({}, std::vector<std::string>{"x"}));
  const auto r = cmd_inspect(dir, "img_00001.ppm");
  CHECK(r.boxes == 0);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("draw_rectangle outlines and clips") {
  RgbImage img{8, 6, std::vector<std::uint8_t>(8 * 6 * 3, 0)};
  const std::array<std::uint8_t, 3> red{255, 0, 0};
  draw_rectangle(img, 1, 1, 4, 3, red);
  const auto lit = [&](int x, int y) { return img.pixels[static_cast<std::size_t>((y * img.width + x) * 3)] == 255; };
  int count = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) count += lit(x, y);
  }
  CHECK(count == 10);
  CHECK(lit(1, 1));
  CHECK(lit(4, 3));
  CHECK_FALSE(lit(2, 2));

  RgbImage edge{4, 4, std::vector<std::uint8_t>(4 * 4 * 3, 0)};
  draw_rectangle(edge, -2, -2, 10, 10, red);
  draw_rectangle(edge, 100, 100, 5, 5, red);
  for (auto v : edge.pixels) CHECK(v == 0);
}
