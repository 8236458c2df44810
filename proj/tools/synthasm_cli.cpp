// synthasm: generate, postprocess, convert, split, evaluate and inspect
// synthetic object-detection datasets rendered from STL assemblies.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synthasm/error.hpp"
#include "synthasm/pipeline.hpp"

namespace {

using namespace synthasm;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) parts.push_back(item);
  return parts;
}

template <typename T, typename Parse>
std::array<T, 3> triple(const std::string& text, const char* flag, Parse parse) {
  const auto parts = split_list(text);
  if (parts.empty() || parts.size() > 3) throw ValidationError(std::string(flag) + " expects 1 to 3 comma-separated values");
  std::array<T, 3> values{};
  try {
    for (std::size_t i = 0; i < parts.size(); ++i) values[i] = parse(parts[i]);
  } catch (const std::exception&) {
    throw ValidationError(std::string(flag) + ": cannot parse '" + text + "'");
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic assembly dataset toolchain"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Render randomized scenes and their raw annotations");
  std::string gen_config;
  std::optional<std::uint64_t> gen_seed;
  std::optional<int> gen_count;
  std::string gen_out;
  bool gen_dump_ids = false;
  gen->add_option("--config", gen_config, "Pipeline config (JSON)")->required();
  gen->add_option("--seed", gen_seed, "Override the config seed");
  gen->add_option("--count", gen_count, "Override the number of images");
  gen->add_option("--out", gen_out, "Output dataset directory (default: config output_dir)");
  gen->add_flag("--dump-ids", gen_dump_ids, "Write instance-id buffers as 16-bit PGM under ids/");

  // postprocess
  auto* post = app.add_subcommand("postprocess", "Drop collided/invisible objects and empty images");
  std::string post_dir;
  std::optional<double> post_vis;
  std::optional<std::int64_t> post_pix;
  post->add_option("dataset", post_dir, "Dataset directory written by generate")->required();
  post->add_option("--min-visibility", post_vis, "Minimum visible fraction of an object's solo footprint");
  post->add_option("--min-pixels", post_pix, "Minimum visible pixel count");

  // convert
  auto* conv = app.add_subcommand("convert", "Convert COCO annotations to YOLO label files");
  std::string conv_in;
  std::string conv_out;
  conv->add_option("coco", conv_in, "COCO annotation file")->required();
  conv->add_option("--out", conv_out, "Output label directory")->required();

  // split
  auto* split = app.add_subcommand("split", "Seeded train/val/test split of a dataset");
  std::string split_dir;
  std::string split_counts;
  std::string split_fractions;
  std::uint64_t split_seed = 0;
  split->add_option("dataset", split_dir, "Dataset directory")->required();
  auto* counts_opt = split->add_option("--counts", split_counts, "train,val[,test] image counts");
  auto* fractions_opt = split->add_option("--fractions", split_fractions, "train,val[,test] fractions");
  counts_opt->excludes(fractions_opt);
  split->add_option("--seed", split_seed, "Shuffle seed");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score detections against ground truth");
  std::string ev_gt;
  std::string ev_det;
  std::string ev_format = "coco";
  double ev_conf = 0.25;
  int ev_width = 640;
  int ev_height = 640;
  std::string ev_out;
  ev->add_option("ground_truth", ev_gt, "COCO file or YOLO label directory")->required();
  ev->add_option("detections", ev_det, "COCO results file or YOLO+confidence directory")->required();
  ev->add_option("--format", ev_format, "coco or yolo")->check(CLI::IsMember({"coco", "yolo"}));
  ev->add_option("--conf-threshold", ev_conf, "Confidence cutoff for precision/recall");
  ev->add_option("--width", ev_width, "Image width for YOLO files");
  ev->add_option("--height", ev_height, "Image height for YOLO files");
  ev->add_option("--out", ev_out, "Write the JSON report here");

  // inspect
  auto* insp = app.add_subcommand("inspect", "Burn annotation boxes into a preview image");
  std::string insp_dir;
  std::string insp_image;
  insp->add_option("dataset", insp_dir, "Dataset directory")->required();
  insp->add_option("image", insp_image, "Image file name, e.g. img_00003.ppm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::Validation);
  }

  try {
    if (*gen) {
      GenerateOptions opts;
      opts.seed = gen_seed;
      opts.count = gen_count;
      if (!gen_out.empty()) opts.out = gen_out;
      opts.dump_ids = gen_dump_ids;
      const auto s = cmd_generate(gen_config, opts);
      std::cout << "generated " << s.images << " images, " << s.annotations << " raw annotations in "
                << s.out_dir.string() << "\n";
    } else if (*post) {
      const auto s = cmd_postprocess(post_dir, {post_vis, post_pix});
      std::cout << "kept " << s.kept << " annotations, removed " << s.removed << ", dropped "
                << s.dropped_images.size() << " image(s)\n";
      for (const auto& d : s.dropped_images) std::cout << "  dropped " << d << "\n";
    } else if (*conv) {
      const auto s = cmd_convert(conv_in, conv_out);
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << s.files << " label files to " << conv_out << "\n";
    } else if (*split) {
      SplitRequest req;
      req.seed = split_seed;
      if (!split_counts.empty()) {
        req.counts = triple<std::int64_t>(split_counts, "--counts", [](const std::string& s) { return std::stoll(s); });
      } else if (!split_fractions.empty()) {
        req.fractions = triple<double>(split_fractions, "--fractions", [](const std::string& s) { return std::stod(s); });
      } else {
        throw ValidationError("split needs --counts or --fractions");
      }
      const auto m = cmd_split(split_dir, req);
      std::cout << "train " << m.train.size() << ", val " << m.val.size() << ", test " << m.test.size() << "\n";
    } else if (*ev) {
      EvaluateOptions opts;
      opts.format = ev_format == "yolo" ? AnnotationFormat::Yolo : AnnotationFormat::Coco;
      opts.eval.conf_threshold = ev_conf;
      opts.width = ev_width;
      opts.height = ev_height;
      if (!ev_out.empty()) opts.json_out = ev_out;
      std::cout << cmd_evaluate(ev_gt, ev_det, opts).text;
    } else if (*insp) {
      const auto r = cmd_inspect(insp_dir, insp_image);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << r.summary << "preview: " << r.preview.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  }
  return 0;
}
