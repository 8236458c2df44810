#include "synthasm/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "synthasm/error.hpp"

namespace synthasm {

namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

double round6(double v) {
  const double r = std::round(v * 1e6) / 1e6;
  return r == 0.0 ? 0.0 : r;  // no "-0.0"
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(where + ": field '" + key + "' has the wrong type");
  }
}

const json& array_field(const json& root, const char* key) {
  const auto it = root.find(key);
  if (it == root.end() || !it->is_array()) throw DataError(std::string("COCO: '") + key + "' must be an array");
  return *it;
}

bool parse_number(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

std::map<std::uint32_t, PixelBox> tight_boxes(std::span<const std::uint32_t> ids, int width, int height) {
  struct Extent {
    int x0, y0, x1, y1;
  };
  std::map<std::uint32_t, Extent> extents;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint32_t id = ids[static_cast<std::size_t>(y) * width + x];
      if (id == kNoInstance) continue;
      auto [it, fresh] = extents.try_emplace(id, Extent{x, y, x, y});
      if (!fresh) {
        Extent& e = it->second;
        e.x0 = std::min(e.x0, x);
        e.x1 = std::max(e.x1, x);
        e.y0 = std::min(e.y0, y);
        e.y1 = std::max(e.y1, y);
      }
    }
  }
  std::map<std::uint32_t, PixelBox> boxes;
  for (const auto& [id, e] : extents) boxes[id] = {e.x0, e.y0, e.x1 - e.x0 + 1, e.y1 - e.y0 + 1};
  return boxes;
}

std::vector<InstanceStats> extract_instances(const RenderOutput& render, const Scene& scene,
                                             const std::map<std::uint32_t, std::int64_t>& solo_counts) {
  const std::size_t n = static_cast<std::size_t>(render.width) * render.height;
  if (render.instance_ids.size() != n) throw DataError("instance buffer size does not match image dimensions");

  std::map<std::uint32_t, std::int64_t> visible;
  for (const auto id : render.instance_ids) {
    if (id != kNoInstance) ++visible[id];
  }
  for (const auto& [id, count] : visible) {
    const SceneObject* obj = scene.find(id);
    if (obj == nullptr || !obj->active) {
      throw DataError("instance buffer contains id " + std::to_string(id) + " which is not an active scene object");
    }
  }
  const auto boxes = tight_boxes(render.instance_ids, render.width, render.height);

  std::vector<InstanceStats> stats;
  for (const auto& obj : scene.objects) {
    if (!obj.active) continue;
    const auto solo = solo_counts.find(obj.id);
    if (solo == solo_counts.end()) throw DataError("no solo pixel count for object " + std::to_string(obj.id));
    InstanceStats s;
    s.object_id = obj.id;
    s.class_id = obj.class_id;
    s.collided = obj.collided;
    s.solo_pixels = solo->second;
    if (const auto v = visible.find(obj.id); v != visible.end()) {
      s.visible_pixels = v->second;
      s.bbox = boxes.at(obj.id);
    }
    s.visibility = std::min(1.0, static_cast<double>(s.visible_pixels) / static_cast<double>(std::max<std::int64_t>(s.solo_pixels, 1)));
    stats.push_back(s);
  }
  return stats;
}

FilterResult filter_instances(std::span<const InstanceStats> stats, const FilterThresholds& thresholds) {
  FilterResult result;
  for (const auto& s : stats) {
    const bool remove =
        s.collided || s.visibility < thresholds.min_visibility || s.visible_pixels < thresholds.min_pixels;
    (remove ? result.removed : result.kept).push_back(s);
  }
  result.drop_image = result.kept.empty();
  return result;
}

const CocoImage* CocoDataset::find_image(int id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

const CocoImage* CocoDataset::find_image(std::string_view file_name) const {
  for (const auto& img : images) {
    if (img.file_name == file_name) return &img;
  }
  return nullptr;
}

CocoDataset make_coco(std::span<const AnnotatedImage> images, std::span<const std::string> category_names) {
  CocoDataset dataset;
  for (std::size_t i = 0; i < category_names.size(); ++i) {
    dataset.categories.push_back({static_cast<int>(i) + 1, category_names[i]});
  }

  std::set<std::string> names;
  std::set<int> ids;
  std::vector<const AnnotatedImage*> ordered;
  for (const auto& img : images) {
    if (!names.insert(img.file_name).second) throw ValidationError("duplicate image file name '" + img.file_name + "'");
    if (!ids.insert(img.image_id).second) throw ValidationError("duplicate image id " + std::to_string(img.image_id));
    if (!img.instances.empty()) ordered.push_back(&img);
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->image_id < b->image_id; });

  int next_annotation = 1;
  for (const AnnotatedImage* img : ordered) {
    dataset.images.push_back({img->image_id, img->file_name, img->width, img->height});
    for (const auto& s : img->instances) {
      if (s.class_id < 0 || static_cast<std::size_t>(s.class_id) >= category_names.size()) {
        throw ValidationError("instance class " + std::to_string(s.class_id) + " has no category");
      }
      CocoAnnotation ann;
      ann.id = next_annotation++;
      ann.image_id = img->image_id;
      ann.category_id = s.class_id + 1;
      ann.bbox = {double(s.bbox.x), double(s.bbox.y), double(s.bbox.w), double(s.bbox.h)};
      ann.area = double(s.bbox.w) * double(s.bbox.h);
      ann.instance_id = s.object_id;
      dataset.annotations.push_back(ann);
    }
  }
  return dataset;
}

std::string serialize_coco(const CocoDataset& dataset) {
  ordered_json root = ordered_json::object();
  root["images"] = ordered_json::array();
  for (const auto& img : dataset.images) {
    ordered_json j;
    j["id"] = img.id;
    j["file_name"] = img.file_name;
    j["width"] = img.width;
    j["height"] = img.height;
    root["images"].push_back(std::move(j));
  }

  std::vector<const CocoAnnotation*> anns;
  for (const auto& a : dataset.annotations) anns.push_back(&a);
  std::sort(anns.begin(), anns.end(), [](const auto* a, const auto* b) {
    return std::pair(a->image_id, a->id) < std::pair(b->image_id, b->id);
  });
  root["annotations"] = ordered_json::array();
  for (const auto* a : anns) {
    ordered_json j;
    j["id"] = a->id;
    j["image_id"] = a->image_id;
    j["category_id"] = a->category_id;
    j["bbox"] = {round6(a->bbox[0]), round6(a->bbox[1]), round6(a->bbox[2]), round6(a->bbox[3])};
    j["area"] = round6(a->area);
    j["iscrowd"] = a->iscrowd;
    j["instance_id"] = a->instance_id;
    root["annotations"].push_back(std::move(j));
  }

  root["categories"] = ordered_json::array();
  for (const auto& c : dataset.categories) {
    ordered_json j;
    j["id"] = c.id;
    j["name"] = c.name;
    root["categories"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

std::string write_coco(std::span<const AnnotatedImage> images, std::span<const std::string> category_names) {
  return serialize_coco(make_coco(images, category_names));
}

CocoDataset parse_coco(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("COCO: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw DataError("COCO: top level must be an object");

  CocoDataset dataset;
  std::set<int> image_ids, category_ids, annotation_ids;

  const json& images = array_field(root, "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "COCO images[" + std::to_string(i) + "]";
    CocoImage img;
    img.id = field<int>(images[i], "id", where);
    img.file_name = field<std::string>(images[i], "file_name", where);
    img.width = field<int>(images[i], "width", where);
    img.height = field<int>(images[i], "height", where);
    if (img.width <= 0 || img.height <= 0) throw DataError(where + ": image dimensions must be positive");
    if (!image_ids.insert(img.id).second) throw DataError(where + ": duplicate image id " + std::to_string(img.id));
    dataset.images.push_back(std::move(img));
  }

  const json& categories = array_field(root, "categories");
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = "COCO categories[" + std::to_string(i) + "]";
    CocoCategory cat;
    cat.id = field<int>(categories[i], "id", where);
    cat.name = field<std::string>(categories[i], "name", where);
    if (!category_ids.insert(cat.id).second) throw DataError(where + ": duplicate category id " + std::to_string(cat.id));
    dataset.categories.push_back(std::move(cat));
  }

  const json& annotations = array_field(root, "annotations");
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = "COCO annotations[" + std::to_string(i) + "]";
    const json& a = annotations[i];
    CocoAnnotation ann;
    ann.id = field<int>(a, "id", where);
    ann.image_id = field<int>(a, "image_id", where);
    ann.category_id = field<int>(a, "category_id", where);
    const auto bbox = field<std::vector<double>>(a, "bbox", where);
    if (bbox.size() != 4) throw DataError(where + ": bbox must have 4 numbers");
    if (bbox[2] < 0.0 || bbox[3] < 0.0) throw DataError(where + ": bbox has negative size");
    std::copy(bbox.begin(), bbox.end(), ann.bbox.begin());
    ann.area = a.contains("area") ? field<double>(a, "area", where) : bbox[2] * bbox[3];
    ann.iscrowd = a.contains("iscrowd") ? field<int>(a, "iscrowd", where) : 0;
    ann.instance_id = a.contains("instance_id") ? field<std::uint32_t>(a, "instance_id", where) : 0;
    if (!annotation_ids.insert(ann.id).second) throw DataError(where + ": duplicate annotation id " + std::to_string(ann.id));
    if (!image_ids.count(ann.image_id)) throw DataError(where + ": references missing image " + std::to_string(ann.image_id));
    if (!category_ids.count(ann.category_id)) {
      throw DataError(where + ": references missing category " + std::to_string(ann.category_id));
    }
    dataset.annotations.push_back(ann);
  }
  return dataset;
}

YoloConversion coco_to_yolo(const CocoDataset& dataset) {
  YoloConversion out;
  out.classes = dataset.categories;
  std::sort(out.classes.begin(), out.classes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::map<int, int> class_index;
  for (std::size_t i = 0; i < out.classes.size(); ++i) class_index[out.classes[i].id] = static_cast<int>(i);

  std::map<int, const CocoImage*> images;
  for (const auto& img : dataset.images) {
    images[img.id] = &img;
    out.files[img.file_name];
  }

  std::vector<const CocoAnnotation*> anns;
  for (const auto& a : dataset.annotations) anns.push_back(&a);
  std::sort(anns.begin(), anns.end(), [](const auto* a, const auto* b) {
    return std::pair(a->image_id, a->id) < std::pair(b->image_id, b->id);
  });

  for (const CocoAnnotation* a : anns) {
    const auto img = images.find(a->image_id);
    if (img == images.end()) throw DataError("annotation " + std::to_string(a->id) + " references missing image");
    const auto cls = class_index.find(a->category_id);
    if (cls == class_index.end()) throw DataError("annotation " + std::to_string(a->id) + " references missing category");
    const double W = img->second->width;
    const double H = img->second->height;
    if (!(W > 0.0 && H > 0.0)) throw DataError("image " + img->second->file_name + " has no positive dimensions");

    const auto [x, y, w, h] = a->bbox;
    const double x0 = std::clamp(x, 0.0, W);
    const double y0 = std::clamp(y, 0.0, H);
    const double x1 = std::clamp(x + w, 0.0, W);
    const double y1 = std::clamp(y + h, 0.0, H);
    if (x0 != x || y0 != y || x1 != x + w || y1 != y + h) {
      out.warnings.push_back("annotation " + std::to_string(a->id) + " exceeds image bounds; clamped");
    }
    if (!(x1 > x0 && y1 > y0)) {
      out.warnings.push_back("annotation " + std::to_string(a->id) + " has no area inside the image; skipped");
      continue;
    }
    out.files[img->second->file_name].push_back(
        {cls->second, (x0 + x1) / 2.0 / W, (y0 + y1) / 2.0 / H, (x1 - x0) / W, (y1 - y0) / H});
  }
  return out;
}

std::string format_yolo(std::span<const YoloRecord> records) {
  std::string text;
  char line[128];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%d %.6f %.6f %.6f %.6f\n", r.class_index, r.cx, r.cy, r.w, r.h);
    text += line;
  }
  return text;
}

std::array<double, 4> yolo_to_pixels(const YoloRecord& r, int width, int height) {
  return {(r.cx - r.w / 2.0) * width, (r.cy - r.h / 2.0) * height, r.w * width, r.h * height};
}

std::vector<YoloBox> parse_yolo(std::string_view text, int width, int height, int num_classes) {
  if (width <= 0 || height <= 0) throw ValidationError("YOLO image dimensions must be positive");
  std::vector<YoloBox> boxes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) fields.push_back(line.substr(start, i - start));
    }
    if (fields.empty()) continue;

    const std::string where = "YOLO line " + std::to_string(line_no);
    if (fields.size() != 5 && fields.size() != 6) {
      throw DataError(where + ": expected 5 or 6 fields, found " + std::to_string(fields.size()));
    }
    double values[6] = {};
    for (std::size_t f = 0; f < fields.size(); ++f) {
      if (!parse_number(fields[f], values[f])) throw DataError(where + ": '" + std::string(fields[f]) + "' is not a number");
    }
    if (values[0] < 0.0 || values[0] != std::floor(values[0])) throw DataError(where + ": class index must be a nonnegative integer");
    const int cls = static_cast<int>(values[0]);
    if (num_classes >= 0 && cls >= num_classes) throw DataError(where + ": class index " + std::to_string(cls) + " out of range");
    for (int f = 1; f < 5; ++f) {
      if (values[f] < -1e-6 || values[f] > 1.0 + 1e-6) throw DataError(where + ": normalized value out of [0,1]");
    }
    if (!(values[3] > 0.0 && values[4] > 0.0)) throw DataError(where + ": box width and height must be positive");

    YoloBox box;
    box.class_index = cls;
    box.bbox = yolo_to_pixels({cls, values[1], values[2], values[3], values[4]}, width, height);
    if (fields.size() == 6) {
      if (values[5] < 0.0 || values[5] > 1.0) throw DataError(where + ": confidence out of [0,1]");
      box.confidence = values[5];
    }
    boxes.push_back(box);
  }
  return boxes;
}

std::string image_stem(std::string_view file_name) {
  const auto slash = file_name.find_last_of("/\\");
  if (slash != std::string_view::npos) file_name.remove_prefix(slash + 1);
  const auto dot = file_name.rfind('.');
  if (dot != std::string_view::npos && dot > 0) file_name = file_name.substr(0, dot);
  return std::string(file_name);
}

}  // namespace synthasm
