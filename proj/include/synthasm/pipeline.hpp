#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthasm/annotate.hpp"
#include "synthasm/config.hpp"
#include "synthasm/eval.hpp"
#include "synthasm/image_io.hpp"

namespace synthasm {

namespace fs = std::filesystem;

// Dataset directory layout written by the pipeline stages.
inline constexpr const char* kImagesDir = "images";
inline constexpr const char* kIdsDir = "ids";
inline constexpr const char* kQuarantineDir = "quarantine";
inline constexpr const char* kInspectDir = "inspect";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kInstancesFile = "instances.json";
inline constexpr const char* kRawCocoFile = "coco_raw.json";
inline constexpr const char* kCocoFile = "annotations.json";
inline constexpr const char* kSplitFile = "split.json";

/// Everything produced for one scene index.
struct RenderedImage {
  AnnotatedImage annotations;  // all active objects, unfiltered
  Scene scene;
  RenderOutput render;
};

/// Builds, renders and annotates scene `index`. A pure function of (config, index).
RenderedImage render_image(const PipelineConfig& config, int index);

std::string image_file_name(const PipelineConfig& config, int index);

/// Worker threads for generation: $SYNTHASM_THREADS if set (>= 1), else the
/// hardware concurrency.
int worker_threads();

struct GenerateOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::optional<fs::path> out;
  /// Also write each instance-id buffer as a 16-bit PGM under ids/.
  bool dump_ids = false;
  /// 0 selects worker_threads().
  int threads = 0;
};

struct GenerateSummary {
  fs::path out_dir;
  int images = 0;
  std::int64_t annotations = 0;
};

GenerateSummary cmd_generate(const fs::path& config_path, const GenerateOptions& options = {});
GenerateSummary generate(const PipelineConfig& config, const GenerateOptions& options = {});

struct PostprocessOptions {
  std::optional<double> min_visibility;
  std::optional<std::int64_t> min_pixels;
};

struct PostprocessSummary {
  FilterThresholds thresholds;
  std::int64_t kept = 0;
  std::int64_t removed = 0;
  std::vector<std::string> dropped_images;
};

/// Filters every image, moves dropped images to quarantine/, writes the final
/// COCO file and records the outcome in the manifest.
PostprocessSummary cmd_postprocess(const fs::path& dataset_dir, const PostprocessOptions& options = {});

struct ConvertSummary {
  std::size_t files = 0;
  std::vector<std::string> warnings;
};

/// Writes one <stem>.txt per image plus classes.txt (names in class-index order).
ConvertSummary cmd_convert(const fs::path& coco_path, const fs::path& out_dir);

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

struct SplitRequest {
  /// Exactly one of counts / fractions is set. Order: train, val, test.
  std::optional<std::array<std::int64_t, 3>> counts;
  std::optional<std::array<double, 3>> fractions;
  std::uint64_t seed = 0;
};

/// Seeded Fisher-Yates shuffle, then consecutive partitions. Fractions are
/// floored per subset; when they sum to 1 the remainder goes to train.
/// Throws ValidationError when the request exceeds the pool.
SplitManifest split_images(std::vector<std::string> images, const SplitRequest& request);

/// Pool: images of annotations.json when present, otherwise the manifest's
/// images minus dropped ones. Writes split.json and train/val/test.txt.
SplitManifest cmd_split(const fs::path& dataset_dir, const SplitRequest& request);

enum class AnnotationFormat { Coco, Yolo };

struct EvaluateOptions {
  AnnotationFormat format = AnnotationFormat::Coco;
  EvalOptions eval;
  /// Image size used to denormalize YOLO files.
  int width = 640;
  int height = 640;
  /// When set, the JSON report is written here.
  std::optional<fs::path> json_out;
};

struct EvaluateResult {
  EvalReport report;
  std::string text;
};

/// COCO: ground truth is a COCO file, detections a COCO results array.
/// YOLO: both are directories of <stem>.txt files; ground truth holds classes.txt.
EvaluateResult cmd_evaluate(const fs::path& gt_path, const fs::path& det_path, const EvaluateOptions& options = {});

struct InspectResult {
  fs::path preview;
  std::size_t boxes = 0;
  std::string summary;
  std::vector<std::string> warnings;
};

/// Burns the image's annotation boxes and class indices into a copy under inspect/.
InspectResult cmd_inspect(const fs::path& dataset_dir, const std::string& image_name);

/// Rectangle outline, clipped to the image.
void draw_rectangle(RgbImage& image, int x, int y, int w, int h, const std::array<std::uint8_t, 3>& color);

}  // namespace synthasm
