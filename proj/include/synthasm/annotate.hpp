#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthasm/render.hpp"
#include "synthasm/scene.hpp"

namespace synthasm {

/// Tight pixel box: covers columns [x, x+w) and rows [y, y+h).
struct PixelBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const { return w == 0 || h == 0; }
  bool operator==(const PixelBox&) const = default;
};

struct InstanceStats {
  std::uint32_t object_id = kNoInstance;
  int class_id = -1;
  PixelBox bbox;
  std::int64_t visible_pixels = 0;
  std::int64_t solo_pixels = 0;
  /// visible / max(solo, 1), clamped to 1.
  double visibility = 0.0;
  bool collided = false;
};

/// Tight boxes of every non-zero id in an id buffer, keyed by id.
std::map<std::uint32_t, PixelBox> tight_boxes(std::span<const std::uint32_t> ids, int width, int height);

/// One entry per active object of the scene, including objects with no
/// visible pixel. Throws DataError if the buffer holds ids the scene does not
/// know or a solo count is missing.
std::vector<InstanceStats> extract_instances(const RenderOutput& render, const Scene& scene,
                                             const std::map<std::uint32_t, std::int64_t>& solo_counts);

struct FilterThresholds {
  double min_visibility = 0.25;
  std::int64_t min_pixels = 16;
};

struct FilterResult {
  std::vector<InstanceStats> kept;
  std::vector<InstanceStats> removed;
  bool drop_image = false;
};

/// Removes collided instances and those below either threshold (strict
/// less-than); the image is dropped when nothing survives.
FilterResult filter_instances(std::span<const InstanceStats> stats, const FilterThresholds& thresholds);

struct CocoImage {
  int id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;

  bool operator==(const CocoImage&) const = default;
};

struct CocoAnnotation {
  int id = 0;
  int image_id = 0;
  int category_id = 0;
  std::array<double, 4> bbox{};  // x, y, w, h in pixels
  double area = 0.0;
  int iscrowd = 0;
  /// Scene object id the box was extracted from; 0 for foreign annotations.
  std::uint32_t instance_id = 0;

  bool operator==(const CocoAnnotation&) const = default;
};

struct CocoCategory {
  int id = 0;
  std::string name;

  bool operator==(const CocoCategory&) const = default;
};

struct CocoDataset {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
  std::vector<CocoCategory> categories;

  bool operator==(const CocoDataset&) const = default;
  const CocoImage* find_image(int id) const;
  const CocoImage* find_image(std::string_view file_name) const;
};

/// Kept instances of one rendered image.
struct AnnotatedImage {
  int image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<InstanceStats> instances;
};

/// Category ids are class_id + 1. Images without instances are omitted.
/// Throws ValidationError on duplicate file names or image ids.
CocoDataset make_coco(std::span<const AnnotatedImage> images, std::span<const std::string> category_names);

/// Canonical JSON. Key order: images(id, file_name, width, height),
/// annotations(id, image_id, category_id, bbox, area, iscrowd, instance_id),
/// categories(id, name); annotations sorted by (image_id, id); reals rounded
/// to 6 decimals.
std::string serialize_coco(const CocoDataset& dataset);

std::string write_coco(std::span<const AnnotatedImage> images, std::span<const std::string> category_names);

/// Throws DataError on malformed JSON, missing fields, duplicate ids or
/// dangling image/category references.
CocoDataset parse_coco(std::string_view json_text);

struct YoloRecord {
  int class_index = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct YoloConversion {
  /// Keyed by image file name; images without annotations map to an empty list.
  std::map<std::string, std::vector<YoloRecord>> files;
  /// Categories in class-index order (sorted by COCO id).
  std::vector<CocoCategory> classes;
  std::vector<std::string> warnings;
};

/// Boxes leaving the image are clamped with a warning; boxes with no area
/// left after clamping are skipped with a warning. Throws DataError for
/// annotations referencing a missing image or category.
YoloConversion coco_to_yolo(const CocoDataset& dataset);

/// One "class cx cy w h" line per record, 6 decimals.
std::string format_yolo(std::span<const YoloRecord> records);

/// Pixel box (x, y, w, h) of a normalized record on a width x height image.
std::array<double, 4> yolo_to_pixels(const YoloRecord& record, int width, int height);

struct YoloBox {
  int class_index = 0;
  std::array<double, 4> bbox{};  // pixels
  std::optional<double> confidence;
};

/// Lines hold 5 numbers (ground truth) or 6 (detection with confidence).
/// Blank lines are skipped. Throws DataError naming the offending line.
/// `num_classes < 0` disables the class-range check.
std::vector<YoloBox> parse_yolo(std::string_view text, int width, int height, int num_classes = -1);

/// "dir/img_00003.ppm" -> "img_00003".
std::string image_stem(std::string_view file_name);

}  // namespace synthasm
