#include "spcnn_cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>

#include "spcnn/checkpoint.hpp"
#include "spcnn/config.hpp"
#include "spcnn/data.hpp"
#include "spcnn/detect.hpp"
#include "spcnn/errors.hpp"
#include "spcnn/eval.hpp"
#include "spcnn/grad_check.hpp"
#include "spcnn/pgm.hpp"
#include "spcnn/train.hpp"
#include "spcnn_cli/manifest.hpp"

namespace spcnn::cli {
namespace {

namespace fs = std::filesystem;

struct Context {
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;
  std::optional<std::size_t> threads;
};

RunManifest start_manifest(const Context& ctx, std::string command) {
  RunManifest m;
  m.command = std::move(command);
  m.argv = ctx.argv;
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& path) {
  m.finished_at = utc_timestamp();
  m.write(path);
}

fs::path sibling_manifest(const fs::path& artifact) {
  return fs::path(artifact.string() + ".manifest.json");
}

// Write to a temporary name first so a crash never leaves a torn file.
void save_checkpoint_atomic(const fs::path& path, const Checkpoint& ckpt) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  save_checkpoint(tmp, ckpt);
  fs::rename(tmp, path);
}

// ---- gen-data ------------------------------------------------------------

struct GenDataArgs {
  SyntheticParams params;
  fs::path out;
};

void gen_data(const Context& ctx, const GenDataArgs& a) {
  RunManifest m = start_manifest(ctx, "gen-data");
  m.seed = a.params.seed;
  m.config = {{"seed", a.params.seed},
              {"count", a.params.count},
              {"size", a.params.image_size},
              {"nuclei", a.params.nuclei_per_image},
              {"min_semi_axis", a.params.min_semi_axis},
              {"max_semi_axis", a.params.max_semi_axis},
              {"noise", a.params.noise_std}};
  Dataset ds;
  ds.manifest = {1, a.params.count, a.params.seed, true};
  ds.images = gen_synthetic(a.params);
  save_dataset(a.out, ds);
  m.artifacts.push_back(a.out / "manifest.json");
  std::size_t nuclei = 0;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "image_%04zu", i);
    m.artifacts.push_back(a.out / (std::string(stem) + ".pgm"));
    m.artifacts.push_back(a.out / (std::string(stem) + ".csv"));
    nuclei += ds.images[i].centers.size();
  }
  finish_manifest(m, a.out / "run_manifest.json");
  ctx.out << "wrote " << ds.images.size() << " images (" << nuclei << " nuclei) to "
          << a.out.string() << "\n";
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  fs::path data;
  fs::path config;
  fs::path out;
  fs::path resume;
  fs::path shapes;
  std::string split = "half";
  bool no_prior = false;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

TrainConfig resolve_config(const Context& ctx, const fs::path& config_path,
                           std::optional<std::size_t> epochs,
                           std::optional<std::uint64_t> seed, bool no_prior) {
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_config(config_path);
  if (epochs) cfg.epochs = *epochs;
  if (seed) cfg.seed = *seed;
  if (no_prior) cfg.lambda = 0.0;
  if (ctx.threads) cfg.threads = *ctx.threads;
  cfg.validate();
  return cfg;
}

ShapeSet shapes_for(const TrainConfig& cfg, const fs::path& dir) {
  return dir.empty() ? generate_shape_set(cfg.shape_seed, cfg.shape_count, cfg.shape_size)
                     : load_shape_set(dir);
}

void train_cmd(const Context& ctx, const TrainArgs& a) {
  RunManifest m = start_manifest(ctx, "train");
  const TrainConfig cfg = resolve_config(ctx, a.config, a.epochs, a.seed, a.no_prior);
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  m.add_input("data", a.data);
  if (!a.config.empty()) m.add_input("config", a.config);
  if (!a.shapes.empty()) m.add_input("shapes", a.shapes);
  if (!a.resume.empty()) m.add_input("resume", a.resume);

  const Dataset ds = load_dataset(a.data);
  if (ds.images.empty()) throw InvalidArgument("train: dataset " + a.data.string() + " is empty");
  std::vector<AnnotatedImage> train_images, val_images;
  if (a.split == "half") {
    Split s = split_half(ds.images);
    train_images = std::move(s.train);
    val_images = std::move(s.test);
  } else {
    train_images = ds.images;
  }
  const auto tuples = build_training_set(train_images, cfg.canny, cfg.patch, cfg.stride);
  if (tuples.empty()) throw InvalidArgument("train: no non-empty training patches");
  const ShapeSet shapes = shapes_for(cfg, a.shapes);

  fs::create_directories(a.out);
  const fs::path ckpt_path = a.out / "model.ckpt";
  const fs::path history_path = a.out / "history.csv";
  {
    std::ofstream cfg_out(a.out / "config.json");
    cfg_out << to_json(cfg).dump(2) << "\n";
  }

  TrainOptions opts;
  std::vector<EpochRecord> history;
  TrainConfig run_cfg = cfg;
  if (!a.resume.empty()) {
    const Checkpoint ck = load_checkpoint(a.resume);
    opts.initial = ck.params;
    opts.completed_epochs = static_cast<std::size_t>(ck.epoch);
    if (fs::exists(history_path)) {
      for (const auto& r : read_history_csv(history_path)) {
        if (r.epoch <= opts.completed_epochs) history.push_back(r);
      }
    }
    run_cfg.epochs = cfg.epochs > opts.completed_epochs ? cfg.epochs - opts.completed_epochs : 0;
  }
  opts.validation = val_images;
  opts.callbacks.on_epoch = [&](const EpochRecord& r, const ModelParams& p) {
    history.push_back(r);
    save_checkpoint_atomic(ckpt_path, {p, cfg.seed, static_cast<int>(r.epoch)});
    write_history_csv(history_path, history);
    ctx.out << "epoch " << r.epoch << "  fidelity " << r.loss.fidelity << "  prior "
            << r.loss.prior << "  total " << r.loss.total << "  lr " << r.lr;
    if (r.val_f1) ctx.out << "  val_f1 " << *r.val_f1;
    ctx.out << std::endl;
  };
  ctx.out << "training on " << tuples.size() << " patches from " << train_images.size()
          << " images" << (val_images.empty() ? "" : ", validating on ")
          << (val_images.empty() ? "" : std::to_string(val_images.size()) + " images")
          << "\n";

  m.artifacts = {ckpt_path, history_path, a.out / "config.json"};
  try {
    if (run_cfg.epochs > 0) train(tuples, shapes, run_cfg, opts);
    if (!fs::exists(ckpt_path)) {
      save_checkpoint_atomic(ckpt_path, {*opts.initial, cfg.seed,
                                         static_cast<int>(opts.completed_epochs)});
      write_history_csv(history_path, history);
    }
  } catch (const NumericFailure&) {
    m.status = "numeric_failure";
    finish_manifest(m, a.out / "run_manifest.json");
    throw;
  }
  finish_manifest(m, a.out / "run_manifest.json");
}

// ---- detect --------------------------------------------------------------

struct DetectArgs {
  fs::path model;
  fs::path image;
  fs::path out;
  double threshold = 0.3;
  std::size_t nms_radius = 3;
};

void detect_cmd(const Context& ctx, const DetectArgs& a) {
  RunManifest m = start_manifest(ctx, "detect");
  m.config = {{"threshold", a.threshold}, {"nms_radius", a.nms_radius}};
  m.add_input("model", a.model);
  m.add_input("image", a.image);
  const Checkpoint ck = load_checkpoint(a.model);
  m.seed = ck.seed;
  const Tensor y = predict(ck.params, to_tensor(read_pgm(a.image)));
  const DetectionSet d = detect(y, a.threshold, a.nms_radius);
  write_detections_csv(a.out, d);
  m.artifacts.push_back(a.out);
  finish_manifest(m, sibling_manifest(a.out));
  ctx.out << d.size() << " detections written to " << a.out.string() << "\n";
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::vector<fs::path> detections;
  std::vector<fs::path> gt;
  fs::path out;
  double radius = kGoldenRadius;
};

// Detections may also be given as a bare "row,col" centres file.
DetectionSet read_detections_any(const fs::path& path) {
  std::ifstream in(path);
  std::string header;
  if (in && std::getline(in, header) && header.rfind("row,col", 0) == 0 &&
      header.find("score") == std::string::npos) {
    DetectionSet d;
    for (const Center& c : read_centers_csv(path)) d.push_back({c.row, c.col, 1.0});
    return d;
  }
  return read_detections_csv(path);
}

void eval_cmd(const Context& ctx, const EvalArgs& a) {
  if (a.detections.size() != a.gt.size()) {
    throw InvalidArgument("eval: " + std::to_string(a.detections.size()) +
                          " detection files but " + std::to_string(a.gt.size()) +
                          " ground-truth files");
  }
  RunManifest m = start_manifest(ctx, "eval");
  m.config = {{"radius", a.radius}};
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < a.detections.size(); ++i) {
    m.add_input("detections", a.detections[i]);
    m.add_input("gt", a.gt[i]);
    const MatchResult r =
        match_golden(read_detections_any(a.detections[i]), read_centers_csv(a.gt[i]), a.radius);
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
  }
  const EvalReport rep = make_report(tp, fp, fn);
  const nlohmann::json j = {{"tp", rep.tp},       {"fp", rep.fp},
                            {"fn", rep.fn},       {"precision", rep.precision},
                            {"recall", rep.recall}, {"f1", rep.f1},
                            {"radius", a.radius}};
  const fs::path out = a.out.empty() ? fs::path(a.detections.front().string() + ".eval.json")
                                     : a.out;
  {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out.string());
    f << std::setprecision(17) << j.dump(2) << "\n";
  }
  m.artifacts.push_back(out);
  finish_manifest(m, sibling_manifest(out));
  ctx.out << std::setprecision(17) << "tp " << rep.tp << "  fp " << rep.fp << "  fn " << rep.fn
          << "  precision " << rep.precision << "  recall " << rep.recall << "  f1 " << rep.f1
          << "\n";
}

// ---- pr-curve ------------------------------------------------------------

struct PrArgs {
  fs::path model;
  fs::path data;
  fs::path out;
  std::string grid = "0.05:0.95:0.05";
  std::string split = "test";
  bool macro = false;
  double radius = kGoldenRadius;
  std::size_t nms_radius = 3;
};

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> parts;
  std::size_t start = 0;
  try {
    while (true) {
      const std::size_t colon = spec.find(':', start);
      std::size_t used = 0;
      const std::string tok = spec.substr(start, colon - start);
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("grid '" + spec + "': expected T or FIRST:LAST:STEP");
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw InvalidArgument("grid '" + spec + "': expected T or FIRST:LAST:STEP");
  return threshold_grid(parts[0], parts[1], parts[2]);
}

void pr_curve_cmd(const Context& ctx, const PrArgs& a) {
  RunManifest m = start_manifest(ctx, "pr-curve");
  m.config = {{"grid", a.grid},     {"split", a.split},   {"averaging", a.macro ? "macro" : "micro"},
              {"radius", a.radius}, {"nms_radius", a.nms_radius}};
  m.add_input("model", a.model);
  m.add_input("data", a.data);
  const std::vector<double> grid = parse_grid(a.grid);
  const Checkpoint ck = load_checkpoint(a.model);
  m.seed = ck.seed;
  const Dataset ds = load_dataset(a.data);
  std::vector<AnnotatedImage> images =
      a.split == "test" ? split_half(ds.images).test : ds.images;
  std::vector<Tensor> outputs;
  std::vector<std::vector<Center>> gts;
  for (const auto& img : images) {
    outputs.push_back(predict(ck.params, img.luminance));
    gts.push_back(img.centers);
  }
  SweepParams sp;
  sp.radius = a.radius;
  sp.nms_radius = a.nms_radius;
  sp.averaging = a.macro ? Averaging::kMacro : Averaging::kMicro;
  const PrCurve curve = pr_sweep(outputs, gts, grid, sp);
  fs::create_directories(a.out);
  write_pr_csv(a.out / "pr.csv", curve);
  write_pr_gnuplot(a.out / "pr.dat", a.out / "pr.gp", curve);
  m.artifacts = {a.out / "pr.csv", a.out / "pr.dat", a.out / "pr.gp"};
  finish_manifest(m, a.out / "run_manifest.json");
  const PrPoint best = best_f1(curve);
  ctx.out << curve.size() << " thresholds on " << images.size() << " images; best f1 "
          << best.f1 << " at T = " << best.threshold << " (precision " << best.precision
          << ", recall " << best.recall << ")\n";
}

// ---- grad-check ----------------------------------------------------------

struct GradCheckArgs {
  fs::path config;
  fs::path out = ".";
  std::uint64_t seed = 0;
  GradCheckOptions options;
  bool no_prior = false;
};

bool grad_check_cmd(const Context& ctx, const GradCheckArgs& a) {
  RunManifest m = start_manifest(ctx, "grad-check");
  const TrainConfig cfg = resolve_config(ctx, a.config, std::nullopt, std::nullopt, a.no_prior);
  if (!a.config.empty()) m.add_input("config", a.config);
  m.config = to_json(cfg);
  m.config["seeds"] = a.options.seeds;
  m.config["flip_prior_sign"] = a.options.flip_prior_sign;
  m.seed = a.seed;
  const GradCheckReport report = grad_check(cfg, a.seed, a.options);
  print_report(ctx.out, report, a.options.tolerance);
  fs::create_directories(a.out);
  {
    std::ofstream f(a.out / "grad_check.txt");
    if (!f) throw IoError("cannot write " + (a.out / "grad_check.txt").string());
    print_report(f, report, a.options.tolerance);
  }
  m.artifacts.push_back(a.out / "grad_check.txt");
  m.status = report.passed() ? "ok" : "failed";
  finish_manifest(m, a.out / "run_manifest.json");
  return report.passed();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-prior CNN for cell-nucleus detection", "spcnn"};
  app.require_subcommand(1);
  app.fallthrough();
  Context ctx{args, out, err, std::nullopt};
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads for per-sample gradients")
      ->envname("SPCNN_THREADS")
      ->check(CLI::PositiveNumber);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic annotated dataset");
  gen_cmd->add_option("--seed", gen.params.seed, "RNG seed");
  gen_cmd->add_option("--count", gen.params.count, "Number of images");
  gen_cmd->add_option("--size", gen.params.image_size, "Image side length");
  gen_cmd->add_option("--nuclei", gen.params.nuclei_per_image, "Nuclei per image");
  gen_cmd->add_option("--noise", gen.params.noise_std, "Gaussian noise std");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  auto* train_sc = app.add_subcommand("train", "Train a model");
  train_sc->add_option("--data", tr.data, "Dataset directory")->required();
  train_sc->add_option("--config", tr.config, "JSON training config");
  train_sc->add_option("--out", tr.out, "Output directory")->required();
  train_sc->add_flag("--no-prior", tr.no_prior, "Train without the shape prior (lambda = 0)");
  train_sc->add_option("--resume", tr.resume, "Checkpoint to continue from");
  train_sc->add_option("--shapes", tr.shapes, "Directory of PGM shape templates");
  train_sc->add_option("--split", tr.split, "half: first half trains, second validates; all")
      ->check(CLI::IsMember({"half", "all"}));
  auto* epochs_opt = train_sc->add_option("--epochs", epochs, "Total epochs");
  auto* seed_opt = train_sc->add_option("--seed", seed, "Training seed");

  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "Detect nuclei in one PGM image");
  det_cmd->add_option("--model", det.model, "Checkpoint")->required();
  det_cmd->add_option("--image", det.image, "PGM image")->required();
  det_cmd->add_option("-T,--threshold", det.threshold, "Detection threshold");
  det_cmd->add_option("--nms-radius", det.nms_radius, "Local-maximum radius");
  det_cmd->add_option("--out", det.out, "Detections CSV")->required();

  EvalArgs ev;
  auto* eval_sc = app.add_subcommand("eval", "Score detections against ground truth");
  eval_sc->add_option("--detections", ev.detections, "Detections CSV (repeatable)")
      ->required();
  eval_sc->add_option("--gt", ev.gt, "Ground-truth centres CSV (repeatable)")->required();
  eval_sc->add_option("--radius", ev.radius, "Golden-standard radius");
  eval_sc->add_option("--out", ev.out, "Report JSON");

  PrArgs pr;
  auto* pr_cmd = app.add_subcommand("pr-curve", "Precision-recall sweep over thresholds");
  pr_cmd->add_option("--model", pr.model, "Checkpoint")->required();
  pr_cmd->add_option("--data", pr.data, "Dataset directory")->required();
  pr_cmd->add_option("--grid", pr.grid, "T or FIRST:LAST:STEP");
  pr_cmd->add_option("--split", pr.split, "test: second half of the dataset; all")
      ->check(CLI::IsMember({"test", "all"}));
  pr_cmd->add_flag("--macro", pr.macro, "Average per-image precision and recall");
  pr_cmd->add_option("--radius", pr.radius, "Golden-standard radius");
  pr_cmd->add_option("--nms-radius", pr.nms_radius, "Local-maximum radius");
  pr_cmd->add_option("--out", pr.out, "Output directory")->required();

  GradCheckArgs gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference gradient audit");
  gc_cmd->add_option("--seeds", gc.options.seeds, "Random instances per component");
  gc_cmd->add_option("--seed", gc.seed, "First seed");
  gc_cmd->add_option("--config", gc.config, "JSON training config");
  gc_cmd->add_option("--eps", gc.options.eps, "Finite-difference step");
  gc_cmd->add_option("--tolerance", gc.options.tolerance, "Relative error tolerance");
  gc_cmd->add_flag("--flip-prior-sign", gc.options.flip_prior_sign,
                   "Negate the prior gradient (the check must then fail)");
  gc_cmd->add_flag("--no-prior", gc.no_prior, "Check with lambda = 0");
  gc_cmd->add_option("--out", gc.out, "Report directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidArgument;
  }
  if (threads > 0) ctx.threads = threads;
  if (*epochs_opt) tr.epochs = epochs;
  if (*seed_opt) tr.seed = seed;

  try {
    if (*gen_cmd) gen_data(ctx, gen);
    else if (*train_sc) train_cmd(ctx, tr);
    else if (*det_cmd) detect_cmd(ctx, det);
    else if (*eval_sc) eval_cmd(ctx, ev);
    else if (*pr_cmd) pr_curve_cmd(ctx, pr);
    else if (*gc_cmd) return grad_check_cmd(ctx, gc) ? kOk : kNumericFailure;
    return kOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidArgument;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace spcnn::cli
