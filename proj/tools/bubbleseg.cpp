// Command-line front end: segment | train | eval | synth | baseline | serve.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "bubbleseg/io.hpp"
#include "bubbleseg/pipeline.hpp"
#include "bubbleseg/service.hpp"

namespace fs = std::filesystem;
using namespace bubbleseg;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : config::load(g.config);
  if (g.seed) {
    cfg.train.seed = *g.seed;
    cfg.synth.seed = *g.seed;
  }
  return cfg;
}

void print_error(ErrorCode code, const std::string& message) {
  nlohmann::json j = {{"error", {{"code", error_code_name(code)}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

struct Inputs {
  std::string image;
  std::string image_id;
  std::string data;
  std::string split = "test";
};

void add_inputs(CLI::App* cmd, Inputs& in) {
  auto* image = cmd->add_option("--image", in.image, "Single input image (PNG, PGM or F32R)");
  auto* data = cmd->add_option("--data", in.data, "Dataset directory containing manifest.json");
  image->excludes(data);
  cmd->add_option("--image-id", in.image_id, "Image id for --image (default: file stem)");
  cmd->add_option("--split", in.split, "Split of --data to process: train, test or all")->capture_default_str();
}

// (id, image path) pairs named by the inputs.
std::vector<std::pair<std::string, fs::path>> resolve_inputs(const Inputs& in) {
  if (!in.image.empty()) return {{in.image_id.empty() ? fs::path(in.image).stem().string() : in.image_id, in.image}};
  if (in.data.empty()) throw Error(ErrorCode::ConfigInvalid, "one of --image or --data is required");
  const app::Dataset data(in.data);
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : data.split(in.split)) out.emplace_back(e.id, data.image_path(e));
  return out;
}

int run_segment(const Globals& g, const Inputs& in, const std::string& checkpoint, bool small_only, bool overlay) {
  const PipelineConfig cfg = load_config(g);
  std::optional<mtnet::NetParams> params;
  if (!small_only) {
    if (checkpoint.empty()) throw Error(ErrorCode::CheckpointNotFound, "checkpoint not found: --checkpoint is required");
    params = mtnet::load_checkpoint(checkpoint);
  }
  const fs::path out = g.out;
  fs::create_directories(out);
  for (const auto& [id, path] : resolve_inputs(in)) {
    const auto img = io::read_image(path);
    const auto set = app::segment(img, params ? &*params : nullptr, cfg, id, small_only);
    io::write_annotation(set, out / (id + ".json"));
    if (overlay) io::write_png(instances::render_overlay(img, set.instances), out / (id + "_overlay.png"));
    fmt::print("{}: {} instances\n", id, set.instances.size());
  }
  return 0;
}

int run_baseline(const Globals& g, const Inputs& in, bool otsu, bool overlay) {
  PipelineConfig cfg = load_config(g);
  if (otsu) cfg.baseline.otsu = true;
  const fs::path out = g.out;
  fs::create_directories(out);
  for (const auto& [id, path] : resolve_inputs(in)) {
    const auto img = io::read_image(path);
    const auto set = app::baseline(img, cfg, id);
    io::write_annotation(set, out / (id + ".json"));
    if (overlay) io::write_png(instances::render_overlay(img, set.instances), out / (id + "_overlay.png"));
    fmt::print("{}: {} instances\n", id, set.instances.size());
  }
  return 0;
}

int run_train(const Globals& g, const std::string& data_dir, bool quiet) {
  const PipelineConfig cfg = load_config(g);
  const app::Dataset data(data_dir);
  const auto samples = app::load_training_set(data);
  std::vector<mtnet::EpochLog> log;
  const auto params = mtnet::train(samples, cfg.train, cfg.loss, cfg.net, cfg.augment, &log, [quiet](const mtnet::EpochLog& e) {
    if (!quiet) fmt::print("epoch {:3d}  lr {:.6f}  dice {:.5f}  wbce {:.5f}  total {:.5f}\n", e.epoch, e.lr, e.dice, e.wbce, e.total);
    std::fflush(stdout);
  });
  const fs::path out = g.out;
  fs::create_directories(out);
  mtnet::save_checkpoint(params, out / "checkpoint.mtnp");
  mtnet::write_train_log_csv(log, out / "train_log.csv");
  io::write_atomic(out / "config.json", config::to_json(cfg).dump(2) + "\n");
  fmt::print("wrote {}\n", (out / "checkpoint.mtnp").string());
  return 0;
}

int run_eval(const Globals& g, const std::string& data_dir, const std::string& split, const std::string& pred_dir,
             const std::string& replay, const std::string& match, bool write_files) {
  PipelineConfig cfg = load_config(g);
  if (!match.empty()) cfg.match = eval::parse_match_mode(match);
  eval::EvalReport report;
  if (!replay.empty()) {
    report = eval::report_from_csv(io::read_text(replay));
  } else {
    if (data_dir.empty() || pred_dir.empty()) throw Error(ErrorCode::ConfigInvalid, "eval needs --data and --pred, or --replay");
    const app::Dataset data(data_dir);
    std::vector<AnnotationSet> gt;
    for (const auto& e : data.split(split)) gt.push_back(io::read_annotation(data.annotation_path(e)));
    report = eval::build_report(gt, app::read_predictions(pred_dir), cfg.match);
  }
  fmt::print("Instance-level recall\n{}\n", eval::format_instance_table(report));
  if (report.total().gt_pixels > 0) fmt::print("Pixel-level recall\n{}", eval::format_pixel_table(report));
  if (write_files) {
    const fs::path out = g.out;
    fs::create_directories(out);
    io::write_atomic(out / "report.csv", eval::report_csv(report));
    io::write_atomic(out / "report.json", eval::report_json(report).dump(2) + "\n");
  }
  return 0;
}

int run_synth(const Globals& g, int n_train, int n_test, bool partial) {
  const PipelineConfig cfg = load_config(g);
  const auto m = synth::generate_dataset(cfg.synth, {n_train, n_test, partial}, g.out);
  fmt::print("wrote {} train + {} test images to {}\n", m.train.size(), m.test.size(), g.out);
  return 0;
}

app::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const Globals& g, const std::string& data_dir, const std::string& checkpoint, const std::string& host,
              int port) {
  const PipelineConfig cfg = load_config(g);
  std::optional<fs::path> ckpt;
  if (!checkpoint.empty()) ckpt = checkpoint;
  app::Service service(data_dir, cfg, ckpt);
  const int bound = service.bind(host, port);
  fmt::print("listening on http://{}:{}\n", host, bound);
  std::fflush(stdout);
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Bubble instance segmentation for SEM micrographs"};
  cli.require_subcommand(1);
  Globals g;
  cli.add_option("--config", g.config, "Pipeline configuration JSON")->check(CLI::ExistingFile);
  cli.add_option("--seed", g.seed, "Seed for training and synthesis");
  cli.add_option("--out", g.out, "Output directory")->capture_default_str();
  cli.fallthrough();

  int rc = 0;

  Inputs seg_in;
  std::string seg_ckpt;
  bool small_only = false, seg_overlay = true;
  auto* seg = cli.add_subcommand("segment", "Segment images with the hybrid pipeline");
  add_inputs(seg, seg_in);
  seg->add_option("--checkpoint", seg_ckpt, "Trained network weights");
  seg->add_flag("--small-only", small_only, "Skip the network, emit edge-detector instances only");
  seg->add_flag("!--no-overlay", seg_overlay, "Do not write overlay PNGs");
  seg->callback([&] { rc = run_segment(g, seg_in, seg_ckpt, small_only, seg_overlay); });

  Inputs base_in;
  bool otsu = false, base_overlay = true;
  auto* base = cli.add_subcommand("baseline", "Segment images with the multi-threshold baseline");
  add_inputs(base, base_in);
  base->add_flag("--otsu", otsu, "Pick the threshold automatically");
  base->add_flag("!--no-overlay", base_overlay, "Do not write overlay PNGs");
  base->callback([&] { rc = run_baseline(g, base_in, otsu, base_overlay); });

  std::string train_data;
  bool quiet = false;
  auto* tr = cli.add_subcommand("train", "Train the network on the train split of a dataset");
  tr->add_option("--data", train_data, "Dataset directory containing manifest.json")->required();
  tr->add_flag("--quiet", quiet, "No per-epoch output");
  tr->callback([&] { rc = run_train(g, train_data, quiet); });

  std::string ev_data, ev_split = "test", ev_pred, ev_replay, ev_match;
  bool ev_write = false;
  auto* ev = cli.add_subcommand("eval", "Recall tables for predictions against ground truth");
  ev->add_option("--data", ev_data, "Dataset directory containing manifest.json");
  ev->add_option("--split", ev_split, "Split to evaluate")->capture_default_str();
  ev->add_option("--pred", ev_pred, "Directory of predicted <id>.json annotations");
  ev->add_option("--replay", ev_replay, "Recompute recalls from a counts CSV")->check(CLI::ExistingFile);
  ev->add_option("--match", ev_match, "Pairing mode: greedy or hungarian");
  ev->add_flag("--write", ev_write, "Also write report.csv and report.json under --out");
  ev->callback([&] { rc = run_eval(g, ev_data, ev_split, ev_pred, ev_replay, ev_match, ev_write); });

  int n_train = 18, n_test = 24;
  bool partial = false;
  auto* sy = cli.add_subcommand("synth", "Generate a synthetic dataset under --out");
  sy->add_option("--n-train", n_train, "Training images")->capture_default_str()->check(CLI::NonNegativeNumber);
  sy->add_option("--n-test", n_test, "Test images")->capture_default_str()->check(CLI::NonNegativeNumber);
  sy->add_flag("--partial-train", partial, "Drop small and 20% of other instances from train annotations");
  sy->callback([&] { rc = run_synth(g, n_train, n_test, partial); });

  std::string sv_data, sv_ckpt, sv_host = "127.0.0.1";
  int sv_port = 8080;
  auto* sv = cli.add_subcommand("serve", "Serve the annotation HTTP API for a dataset");
  sv->add_option("--data", sv_data, "Dataset directory containing manifest.json")->required();
  sv->add_option("--checkpoint", sv_ckpt, "Weights for /api/segment");
  sv->add_option("--host", sv_host)->capture_default_str();
  sv->add_option("--port", sv_port)->capture_default_str();
  sv->callback([&] { rc = run_serve(g, sv_data, sv_ckpt, sv_host, sv_port); });

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return e.code() == ErrorCode::CheckpointNotFound ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(ErrorCode::IoError, e.what());
    return 1;
  }
  return rc;
}
