#include "cathseg/cli/commands.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cathseg/dataset.hpp"
#include "cathseg/errors.hpp"
#include "cathseg/image_io.hpp"
#include "cathseg/metrics.hpp"
#include "cathseg/nn/checkpoint.hpp"
#include "cathseg/nn/train.hpp"
#include "detail/json_config.hpp"

namespace cathseg::cli {

namespace fs = std::filesystem;

namespace {

RunConfig load_config(const CommonOptions& common) {
  if (common.threads < 1) throw ConfigError("--threads must be >= 1");
  return common.config ? load_run_config(*common.config) : RunConfig{};
}

fs::path require_path(const std::optional<fs::path>& flag, const std::string& from_config, const char* what) {
  if (flag) return *flag;
  if (!from_config.empty()) return from_config;
  throw ConfigError(std::string("missing ") + what);
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

/// Runs fn(0..n-1) on up to `threads` workers; rethrows the first failure.
template <typename F>
void parallel_for(int n, int threads, F&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex lock;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> guard(lock);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

fs::path default_loss_csv(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".loss.csv");
  return p;
}

// ---------------------------------------------------------------------------

int gen_data(const CommonOptions& common, const GenDataOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_config(common);
    if (common.seed) cfg.synth.seed = *common.seed;
    if (options.n < 1) throw ConfigError("--n must be >= 1");
    const fs::path dir = require_path(options.out, cfg.paths.data, "output directory (--out)");
    const fs::path manifest = generate_dataset(cfg.synth, options.n, dir);
    out << manifest.string() << "\n";
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------

namespace {

struct LossRow {
  int epoch;
  double loss;
};

std::vector<LossRow> read_loss_csv(const fs::path& path) {
  std::vector<LossRow> rows;
  if (!fs::exists(path)) return rows;
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossRow r{};
    if (std::sscanf(line.c_str(), "%d,%lf", &r.epoch, &r.loss) != 2) throw IoError("malformed loss trace " + path.string());
    rows.push_back(r);
  }
  return rows;
}

void write_loss_csv(const fs::path& path, const std::vector<LossRow>& rows) {
  std::string text = "epoch,mean_loss\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g\n", r.epoch, r.loss);
    text += buf;
  }
  write_file_atomic(path, text);
}

}  // namespace

int train(const CommonOptions& common, const TrainCommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = load_config(common);
    if (common.seed) cfg.train.seed = *common.seed;
    const fs::path data = require_path(options.data, cfg.paths.data, "data directory (--data)");
    const fs::path ckpt_path = require_path(options.checkpoint, cfg.paths.checkpoint, "checkpoint path (--checkpoint)");
    const int epochs = options.epochs.value_or(cfg.train.epochs);
    if (epochs < 0) throw ConfigError("--epochs must be >= 0");

    std::optional<nn::Checkpoint> resumed;
    std::vector<LossRow> trace;
    if (options.resume) {
      resumed = nn::load_checkpoint(*options.resume);
      trace = read_loss_csv(default_loss_csv(*options.resume));
    }
    const nn::ModelConfig model_cfg = resumed ? resumed->net.config() : cfg.model;

    const auto sequences = list_sequences(data);
    if (sequences.empty()) throw ConfigError("no seq_* directories in " + data.string());
    std::vector<nn::TrainingSample> samples;
    for (const auto& dir : sequences) {
      auto s = nn::samples_from_sequence(load_sequence(dir, true), model_cfg.input_frames);
      samples.insert(samples.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    nn::check_input_shape(model_cfg, nn::Shape4{1, model_cfg.input_frames, samples.front().mask.height(),
                                                samples.front().mask.width()});

    nn::SegmentationNet<float> net = resumed ? std::move(resumed->net) : nn::SegmentationNet<float>(model_cfg, mix_seed(cfg.train.seed));
    nn::SgdState<float> state{cfg.optimizer, {}};
    int first_epoch = 0;
    if (resumed) {
      first_epoch = resumed->epochs_done;
      if (resumed->optimizer) state = std::move(*resumed->optimizer);
    }
    trace.erase(std::remove_if(trace.begin(), trace.end(), [&](const LossRow& r) { return r.epoch > first_epoch; }),
                trace.end());

    nn::TrainOptions opts;
    opts.epochs = epochs;
    opts.first_epoch = first_epoch;
    opts.batch_size = cfg.train.batch_size;
    opts.augment = cfg.train.augment;
    opts.augment_config = cfg.augment;
    opts.seed = cfg.train.seed;
    opts.on_epoch = [&](int epoch, double loss) {
      out << "epoch " << epoch + 1 << " loss " << fixed(loss) << "\n" << std::flush;
    };
    out << "training on " << samples.size() << " samples from " << sequences.size() << " sequences\n";
    const std::vector<double> losses = nn::train(net, state, samples, opts);
    for (std::size_t i = 0; i < losses.size(); ++i) trace.push_back({first_epoch + static_cast<int>(i) + 1, losses[i]});

    const fs::path csv = options.loss_csv.value_or(default_loss_csv(ckpt_path));
    if (ckpt_path.has_parent_path()) make_dirs(ckpt_path.parent_path());
    nn::save_checkpoint(ckpt_path, net, &state, first_epoch + epochs);
    write_loss_csv(csv, trace);
    out << "checkpoint " << ckpt_path.string() << "\n";
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------

namespace {

RgbImage render_overlay(const PixelGrid<float>& gray, const std::optional<Centerline>& centerline) {
  const int w = static_cast<int>(gray.cols()), h = static_cast<int>(gray.rows());
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(gray(y, x), 0.0f, 1.0f) * 255.0f));
      img.r(y, x) = img.g(y, x) = img.b(y, x) = v;
    }
  if (!centerline || centerline->empty()) return img;
  const auto& pts = centerline->points;
  // Tip in red fading to blue at the tail.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int x = static_cast<int>(std::lround(pts[i].x())), y = static_cast<int>(std::lround(pts[i].y()));
    if (x < 0 || y < 0 || x >= w || y >= h) continue;
    const double t = pts.size() > 1 ? static_cast<double>(i) / (pts.size() - 1) : 0.0;
    img.r(y, x) = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
    img.g(y, x) = 0;
    img.b(y, x) = static_cast<std::uint8_t>(std::lround(255.0 * t));
  }
  const int tx = static_cast<int>(std::lround(pts.front().x())), ty = static_cast<int>(std::lround(pts.front().y()));
  for (int d = -2; d <= 2; ++d)
    for (const auto& [x, y] : {std::pair{tx + d, ty}, std::pair{tx, ty + d}})
      if (x >= 0 && y >= 0 && x < w && y < h) {
        img.r(y, x) = 0;
        img.g(y, x) = 255;
        img.b(y, x) = 0;
      }
  return img;
}

struct SequenceJob {
  fs::path input;
  fs::path output;
};

std::vector<SequenceJob> sequence_jobs(const fs::path& input, const fs::path& out) {
  std::vector<SequenceJob> jobs;
  const auto seqs = list_sequences(input);
  if (seqs.empty()) jobs.push_back({input, out});
  for (const auto& s : seqs) jobs.push_back({s, out / s.filename()});
  return jobs;
}

}  // namespace

int extract(const CommonOptions& common, const ExtractOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(common);
    const fs::path input = require_path(options.input, cfg.paths.data, "input directory (--input)");
    const fs::path out_dir = require_path(options.out, cfg.paths.output, "output directory (--out)");
    if (!fs::is_directory(input)) throw ConfigError("input is not a directory: " + input.string());

    std::optional<nn::SegmentationNet<float>> net;
    if (!options.no_model) {
      const fs::path ckpt = require_path(options.checkpoint, cfg.paths.checkpoint, "checkpoint (--checkpoint)");
      net = nn::load_checkpoint(ckpt).net;
    }

    // Load and validate every input before writing anything.
    const auto jobs = sequence_jobs(input, out_dir);
    std::vector<std::vector<ProbabilityMap>> maps(jobs.size());
    std::vector<std::vector<PixelGrid<float>>> backdrops(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const fs::path& dir = jobs[j].input;
      if (options.no_model) {
        const int n = count_frames(dir, "mask");
        if (n == 0) throw ConfigError("no mask_0.png in " + dir.string());
        const int frames = count_frames(dir, "frame");
        for (int i = 0; i < n; ++i) {
          const BinaryMask m = load_mask(dir / frame_file("mask", i, ".png"));
          maps[j].push_back(to_probability(m));
          backdrops[j].push_back(i < frames ? load_image(dir / frame_file("frame", i, ".png")).pixels
                                            : PixelGrid<float>(m.pixels.cast<float>()));
        }
      } else {
        const FrameSequence seq = load_sequence(dir, false);
        for (const Image& f : seq.frames) backdrops[j].push_back(f.pixels);
        nn::check_input_shape(net->config(), nn::Shape4{1, net->config().input_frames, seq.height(), seq.width()});
      }
    }

    parallel_for(static_cast<int>(jobs.size()), common.threads, [&](int j) {
      const auto ju = static_cast<std::size_t>(j);
      if (!options.no_model) {
        const FrameSequence seq = load_sequence(jobs[ju].input, false);
        std::vector<std::vector<Image>> stacks;
        for (int i = 0; i < static_cast<int>(seq.frames.size()); ++i)
          stacks.push_back(nn::frame_stack(seq.frames, i, net->config().input_frames));
        maps[ju] = nn::model_forward(*net, nn::pack_inputs<float>(stacks));
      }
      make_dirs(jobs[ju].output);
      for (std::size_t i = 0; i < maps[ju].size(); ++i) {
        const ProbabilityMap& pm = maps[ju][i];
        const std::optional<Centerline> c = extract_centerline(pm, cfg.extract);
        const int fi = static_cast<int>(i);
        write_probability_png(jobs[ju].output / frame_file("prob", fi, ".png"), pm);
        write_centerline(jobs[ju].output / frame_file("centerline", fi, ".json"), c, pm.width(), pm.height());
        write_png_rgb8(jobs[ju].output / frame_file("overlay", fi, ".png"), render_overlay(backdrops[ju][i], c));
      }
    });
    std::size_t frames = 0;
    for (const auto& m : maps) frames += m.size();
    out << "extracted " << frames << " frames from " << jobs.size() << " sequences into " << out_dir.string() << "\n";
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------

int evaluate(const CommonOptions& common, const EvaluateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_config(common);
    const fs::path pred = require_path(options.predictions, cfg.paths.output, "predictions directory (--pred)");
    const fs::path gt = require_path(options.ground_truth, cfg.paths.data, "ground-truth directory (--gt)");
    const PixelSpacing spacing(options.pixel_spacing.value_or(cfg.pixel_spacing));
    const double threshold = options.threshold_mm.value_or(cfg.evaluate.threshold_mm);
    if (!(threshold > 0.0)) throw ConfigError("--threshold-mm must be > 0");
    if (!fs::is_directory(gt)) throw ConfigError("ground truth is not a directory: " + gt.string());
    if (!fs::is_directory(pred)) throw ConfigError("predictions is not a directory: " + pred.string());
    const fs::path out_dir = options.out.value_or(pred);

    struct Pair {
      std::string name;
      fs::path gt, pred;
    };
    std::vector<Pair> pairs;
    const auto gt_seqs = list_sequences(gt);
    if (gt_seqs.empty()) pairs.push_back({gt.filename().string(), gt, pred});
    for (const auto& s : gt_seqs) pairs.push_back({s.filename().string(), s, pred / s.filename()});

    std::vector<std::string> unmatched;
    std::vector<FrameResult> results;
    for (const auto& p : pairs) {
      int n = 0;
      while (fs::exists(p.gt / frame_file("centerline", n, ".json"))) ++n;
      for (int i = 0; i < n; ++i) {
        const fs::path pf = p.pred / frame_file("centerline", i, ".json");
        if (!fs::exists(pf)) {
          unmatched.push_back(p.name + "/" + frame_file("centerline", i, ".json") + " (no prediction)");
          continue;
        }
        const CenterlineRecord g = read_centerline(p.gt / frame_file("centerline", i, ".json"));
        const CenterlineRecord s = read_centerline(pf);
        if (g.centerline.empty()) {
          unmatched.push_back(p.name + "/" + frame_file("centerline", i, ".json") + " (empty ground truth)");
          continue;
        }
        std::optional<Centerline> seg;
        if (s.success) seg = s.centerline;
        results.push_back(evaluate_frame(p.name, i, g.centerline, seg, spacing));
      }
      for (int i = n; fs::exists(p.pred / frame_file("centerline", i, ".json")); ++i)
        unmatched.push_back(p.name + "/" + frame_file("centerline", i, ".json") + " (no ground truth)");
    }
    if (gt_seqs.size() > 0)
      for (const auto& s : list_sequences(pred))
        if (!fs::exists(gt / s.filename())) unmatched.push_back(s.filename().string() + " (no ground truth)");

    const EvaluationSummary summary = summarize(results, threshold);
    make_dirs(out_dir);
    std::string csv = "sequence,frame,tip_px,tip_mm,gt2seg_px,gt2seg_mm,seg2gt_px,seg2gt_mm,success\n";
    for (const auto& r : results)
      csv += r.sequence + "," + std::to_string(r.frame) + "," + fixed(r.tip_px) + "," + fixed(r.tip_mm) + "," +
             fixed(r.gt_to_seg_px) + "," + fixed(r.gt_to_seg_mm) + "," + fixed(r.seg_to_gt_px) + "," +
             fixed(r.seg_to_gt_mm) + "," + (r.success ? "1" : "0") + "\n";
    write_file_atomic(out_dir / "report.csv", csv);

    nlohmann::ordered_json j;
    j["frames"] = summary.frames;
    j["failures"] = summary.failures;
    j["pixel_spacing_mm"] = spacing.mm_per_pixel();
    j["median_tip_px"] = summary.median_tip_px;
    j["median_tip_mm"] = summary.median_tip_mm;
    j["mean_tip_mm"] = summary.mean_tip_mm;
    j["median_centerline_px"] = summary.median_centerline_px;
    j["median_centerline_mm"] = summary.median_centerline_mm;
    j["mean_centerline_mm"] = summary.mean_centerline_mm;
    j["median_gt_to_seg_mm"] = summary.median_gt_to_seg_mm;
    j["median_seg_to_gt_mm"] = summary.median_seg_to_gt_mm;
    j["threshold_mm"] = summary.threshold_mm;
    j["percent_under_threshold"] = summary.percent_under_threshold;
    nlohmann::ordered_json prec;
    prec["median_mm"] = summary.precision.median_mm;
    prec["mean_mm"] = summary.precision.mean_mm;
    prec["min_mm"] = summary.precision.min_mm;
    prec["max_mm"] = summary.precision.max_mm;
    prec["excluded"] = summary.precision.excluded;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& s : summary.precision.sequences)
      per.push_back({{"sequence", s.sequence}, {"tip_std_px", s.tip_std_px}, {"tip_std_mm", s.tip_std_mm},
                     {"frames", s.frames}});
    prec["sequences"] = std::move(per);
    j["tip_precision"] = std::move(prec);
    j["unmatched"] = unmatched;
    write_file_atomic(out_dir / "summary.json", j.dump(2) + "\n");

    for (const auto& name : summary.precision.excluded)
      err << "warning: " << name << " has fewer than two successful frames; excluded from tip precision\n";
    out << "frames " << summary.frames << ", failures " << summary.failures << "\n"
        << "median tip error " << fixed(summary.median_tip_px) << " px (" << fixed(summary.median_tip_mm) << " mm)\n"
        << "median centerline distance " << fixed(summary.median_centerline_px) << " px ("
        << fixed(summary.median_centerline_mm) << " mm)\n"
        << "frames under " << summary.threshold_mm << " mm: " << fixed(summary.percent_under_threshold) << "%\n";
    if (!unmatched.empty()) {
      for (const auto& u : unmatched) err << "unmatched: " << u << "\n";
      return int(kMismatch);
    }
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Catheter segmentation and centerline extraction"};
  app.require_subcommand(1);
  CommonOptions common;
  std::string config;
  std::uint64_t seed = 0;
  app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for the running command");
  app.add_option("--threads", common.threads, "Worker threads for per-sequence work")->check(CLI::PositiveNumber);

  GenDataOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--out", gen_out, "Output directory");
  gen_cmd->add_option("--n", gen.n, "Number of sequences");

  TrainCommandOptions tr;
  std::string tr_data, tr_ckpt, tr_resume, tr_csv;
  int tr_epochs = 0;
  auto* train_cmd = app.add_subcommand("train", "Train the segmentation network");
  train_cmd->add_option("--data", tr_data, "Dataset directory");
  train_cmd->add_option("--checkpoint", tr_ckpt, "Checkpoint to write");
  auto* epochs_opt = train_cmd->add_option("--epochs", tr_epochs, "Number of epochs");
  train_cmd->add_option("--resume", tr_resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  train_cmd->add_option("--loss-csv", tr_csv, "Loss trace output");

  ExtractOptions ex;
  std::string ex_ckpt, ex_in, ex_out;
  auto* extract_cmd = app.add_subcommand("extract", "Segment frames and extract centerlines");
  extract_cmd->add_option("--checkpoint", ex_ckpt, "Trained checkpoint");
  extract_cmd->add_option("--input", ex_in, "Sequence directory or dataset directory");
  extract_cmd->add_option("--out", ex_out, "Output directory");
  extract_cmd->add_flag("--no-model", ex.no_model, "Extract from mask_#.png without the network");

  EvaluateOptions ev;
  std::string ev_pred, ev_gt, ev_out;
  double ev_spacing = 1.0, ev_threshold = 1.0;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare extracted centerlines with ground truth");
  eval_cmd->add_option("--pred", ev_pred, "Directory written by extract");
  eval_cmd->add_option("--gt", ev_gt, "Ground-truth dataset or sequence directory");
  eval_cmd->add_option("--out", ev_out, "Report directory (default: --pred)");
  auto* spacing_opt = eval_cmd->add_option("--pixel-spacing", ev_spacing, "Millimeters per pixel");
  auto* threshold_opt = eval_cmd->add_option("--threshold-mm", ev_threshold, "Threshold for percent-under statistic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int(kOk) : int(kUsage);
  }

  if (!config.empty()) common.config = config;
  if (seed_opt->count()) common.seed = seed;
  auto opt_path = [](const std::string& s) { return s.empty() ? std::optional<fs::path>{} : fs::path(s); };

  if (gen_cmd->parsed()) {
    gen.out = opt_path(gen_out);
    return gen_data(common, gen, out, err);
  }
  if (train_cmd->parsed()) {
    tr.data = opt_path(tr_data);
    tr.checkpoint = opt_path(tr_ckpt);
    tr.resume = opt_path(tr_resume);
    tr.loss_csv = opt_path(tr_csv);
    if (epochs_opt->count()) tr.epochs = tr_epochs;
    return train(common, tr, out, err);
  }
  if (extract_cmd->parsed()) {
    ex.checkpoint = opt_path(ex_ckpt);
    ex.input = opt_path(ex_in);
    ex.out = opt_path(ex_out);
    return extract(common, ex, out, err);
  }
  ev.predictions = opt_path(ev_pred);
  ev.ground_truth = opt_path(ev_gt);
  ev.out = opt_path(ev_out);
  if (spacing_opt->count()) ev.pixel_spacing = ev_spacing;
  if (threshold_opt->count()) ev.threshold_mm = ev_threshold;
  return evaluate(common, ev, out, err);
}

}  // namespace cathseg::cli
