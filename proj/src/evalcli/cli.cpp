#include "tpmtl/evalcli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tpmtl/core/binary_io.hpp"
#include "tpmtl/core/error.hpp"
#include "tpmtl/evalcli/compare.hpp"
#include "tpmtl/evalcli/gradsuite.hpp"
#include "tpmtl/evalcli/report.hpp"
#include "tpmtl/mtl/checkpoint.hpp"
#include "tpmtl/mtl/train.hpp"

namespace tpmtl {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  std::size_t h = 0, w = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    h = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    w = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw ConfigError("size must look like HxW, got '" + text + "'");
  }
  if (h == 0 || w == 0) throw ConfigError("size must be positive, got '" + text + "'");
  return {h, w};
}

namespace {

struct TrainFlags {
  std::string config, data, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<long> iters;
  std::optional<std::string> render_size, sampling;
  std::optional<std::size_t> samples;
  bool cross_view = false, aux_heads = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config, "Training configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--alpha", f.alpha, "Final regularizer weight");
  cmd->add_option("--iters", f.iters, "Training iterations (alpha ramps over the first half)");
  cmd->add_option("--render-size", f.render_size, "Regularizer render resolution HxW");
  cmd->add_option("--samples", f.samples, "Samples per ray");
  cmd->add_option("--sampling", f.sampling, "midpoint or stratified");
  cmd->add_flag("--cross-view", f.cross_view, "Add the cross-view term (needs paired data)");
  cmd->add_flag("--aux-heads", f.aux_heads, "Replace the regularizer branch by duplicate 2D heads");
}

TrainConfig build_train_config(const TrainFlags& f) {
  TrainConfig cfg = f.config.empty() ? TrainConfig{} : load_train_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.iters) {
    cfg.total_iters = *f.iters;
    cfg.alpha = AlphaSchedule::half_ramp(*f.iters, cfg.alpha.alpha_max);
  }
  if (f.alpha) cfg.alpha.alpha_max = *f.alpha;
  if (f.render_size) std::tie(cfg.model.render.height, cfg.model.render.width) = parse_size(*f.render_size);
  if (f.samples) cfg.model.render.samples = *f.samples;
  if (f.cross_view) cfg.cross_view = true;
  if (f.aux_heads) cfg.aux_heads_baseline = true;
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (cfg.data_dir.empty()) throw ConfigError("--data is required");
  cfg.validate();
  return cfg;
}

std::optional<SampleMode> sampling_of(const TrainFlags& f) {
  if (!f.sampling) return std::nullopt;
  return parse_sample_mode(*f.sampling);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

// Display colour of one rendered pixel.
std::array<unsigned char, 3> colour(const TaskSpec& t, const double* v) {
  auto byte = [](double x) { return static_cast<unsigned char>(std::lround(255.0 * std::clamp(x, 0.0, 1.0))); };
  switch (t.kind) {
    case TaskKind::segmentation: {
      static const unsigned char palette[8][3] = {{40, 40, 40},   {230, 25, 75},  {60, 180, 75},  {255, 225, 25},
                                                  {0, 130, 200},  {245, 130, 48}, {145, 30, 180}, {70, 240, 240}};
      const std::size_t k = static_cast<std::size_t>(std::max_element(v, v + t.value_dim) - v);
      if (k < 8) return {palette[k][0], palette[k][1], palette[k][2]};
      return {byte((k * 37 % 255) / 255.0), byte((k * 91 % 255) / 255.0), byte((k * 53 % 255) / 255.0)};
    }
    case TaskKind::depth: {
      const unsigned char g = byte(1.0 - v[0] / Camera::depth_range());
      return {g, g, g};
    }
    case TaskKind::normal: return {byte(0.5 * (v[0] + 1)), byte(0.5 * (v[1] + 1)), byte(0.5 * (v[2] + 1))};
    case TaskKind::boundary: {
      const unsigned char g = byte(v[0]);
      return {g, g, g};
    }
  }
  return {0, 0, 0};
}

void write_ppm(const fs::path& path, std::size_t h, std::size_t w, const std::vector<unsigned char>& rgb) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

// PPM preview, raw float32 values and a JSON sidecar describing them.
void write_render(const fs::path& dir, const std::string& stem, const TaskSpec* task, const Tensor& values,
                  std::size_t h, std::size_t w, const json& meta) {
  const std::size_t d = values.numel() / (h * w);
  std::vector<float> raw(values.data().begin(), values.data().end());
  io::write_file<float>(dir / (stem + ".f32"), raw);
  std::vector<unsigned char> rgb(h * w * 3);
  const auto v = values.data();
  for (std::size_t p = 0; p < h * w; ++p) {
    std::array<unsigned char, 3> c;
    if (task) {
      c = colour(*task, v.data() + p * d);
    } else {
      const auto g = static_cast<unsigned char>(std::lround(255.0 * std::clamp(1.0 - v[p] / Camera::depth_range(), 0.0, 1.0)));
      c = {g, g, g};
    }
    std::copy(c.begin(), c.end(), rgb.begin() + 3 * p);
  }
  write_ppm(dir / (stem + ".ppm"), h, w, rgb);
  json side = meta;
  side["height"] = h;
  side["width"] = w;
  side["channels"] = d;
  side["dtype"] = "float32";
  side["byte_order"] = "little";
  side["layout"] = "HWC";
  side["min"] = *std::min_element(v.begin(), v.end());
  side["max"] = *std::max_element(v.begin(), v.end());
  write_text(dir / (stem + ".json"), side.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_gen_data(const fs::path& out_dir, const DatasetSpec& spec, std::ostream& out) {
  const Dataset data = generate_dataset(spec);
  write_dataset(data, out_dir);
  out << "wrote " << data.records.size() << " samples to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const TrainConfig cfg = build_train_config(f);
  const Dataset data = read_dataset(cfg.data_dir);
  TrainHooks hooks;
  hooks.sampling = sampling_of(f);
  hooks.on_log = [&](const LogRow& row) {
    char line[96];
    std::snprintf(line, sizeof line, "iter %6ld  alpha %.3f  total %.5f", row.iter, row.alpha, row.total);
    out << line << "\n" << std::flush;
  };
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "config.json", to_json(cfg).dump(2) + "\n");
  const TrainResult r = train(cfg, data, hooks);
  out << "checkpoint " << r.checkpoint.string() << "\nmetrics " << r.metrics.string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split, const std::string& out_dir,
             std::ostream& out) {
  MultiTaskModel model = load_checkpoint(ckpt);
  const Dataset data = read_dataset(data_dir);
  const auto records = data.split(split);
  if (records.empty()) throw ValidationError("split '" + split + "' is empty");
  const MetricReport report = evaluate(model, records);
  out << report.table();
  const std::string doc = report.to_json().dump(2) + "\n";
  if (out_dir.empty()) {
    out << doc;
  } else {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.json", doc);
    write_text(fs::path(out_dir) / "report.txt", report.table());
    out << "report " << (fs::path(out_dir) / "report.json").string() << "\n";
  }
  return kExitOk;
}

int cmd_render(const std::string& ckpt, const std::string& data_dir, const std::string& ids, const std::string& out_dir,
               const std::optional<std::string>& size, const std::optional<std::size_t>& samples, std::ostream& out) {
  MultiTaskModel model = load_checkpoint(ckpt);
  if (!model.has_regularizer()) throw ValidationError("checkpoint " + ckpt + " has no regularizer branch to render");
  const Dataset data = read_dataset(data_dir);
  RenderConfig rc = model.config().render;
  if (size) std::tie(rc.height, rc.width) = parse_size(*size);
  if (samples) rc.samples = *samples;
  std::vector<std::string> wanted = split_list(ids);
  if (wanted.empty()) throw ConfigError("--ids names no samples");
  fs::create_directories(out_dir);
  for (const std::string& id : wanted) {
    const auto it = std::find_if(data.records.begin(), data.records.end(), [&](const SampleRecord& r) { return r.id == id; });
    if (it == data.records.end()) throw ValidationError("no sample '" + id + "' in " + data_dir);
    const ViewLabels& v = it->view;
    std::vector<double> img(v.image.begin(), v.image.end());
    const Tensor images({1, 3, v.height, v.width}, std::move(img));
    const RenderOutput r = inspect_regularizer(model, images, Camera{}, rc).front();
    const json meta = {{"sample", id}, {"checkpoint", ckpt}, {"samples_per_ray", rc.samples}};
    for (const TaskSpec& t : model.tasks()) {
      json m = meta;
      m["task"] = t.name();
      write_render(out_dir, id + "_" + t.name(), &t, r.predictions.at(t.name()), rc.height, rc.width, m);
    }
    json m = meta;
    m["task"] = "density_depth";
    write_render(out_dir, id + "_density_depth", nullptr, depth_from_density(r.weights, r.rays.t_samples), rc.height,
                 rc.width, m);
    out << "rendered " << id << " (" << model.tasks().size() + 1 << " maps)\n";
  }
  return kExitOk;
}

int cmd_gradcheck(int seeds, std::ostream& out) {
  const auto entries = run_gradient_suite(seeds);
  bool ok = true;
  char line[128];
  std::snprintf(line, sizeof line, "%-26s %12s %10s  %s\n", "check", "max_rel_err", "tolerance", "status");
  out << line;
  for (const GradSuiteEntry& e : entries) {
    std::snprintf(line, sizeof line, "%-26s %12.3e %10.0e  %s\n", e.name.c_str(), e.max_rel_error, e.tolerance,
                  e.passed() ? "ok" : "FAIL");
    out << line;
    ok = ok && e.passed();
  }
  out << entries.size() << " checks over " << seeds << " seeds: " << (ok ? "all passed" : "FAILURES") << "\n";
  return ok ? kExitOk : kExitNumerical;
}

int cmd_compare(const TrainFlags& f, int seeds, std::ostream& out) {
  CompareOptions opt;
  opt.base = build_train_config(f);
  opt.seeds = seeds;
  opt.alpha = f.alpha.value_or(opt.base.alpha.alpha_max);
  opt.aux_heads = f.aux_heads;
  opt.base.aux_heads_baseline = false;
  opt.out_dir = f.out.empty() ? fs::path("compare") : fs::path(f.out);
  opt.sampling = sampling_of(f);
  const Dataset data = read_dataset(opt.base.data_dir);
  fs::create_directories(opt.out_dir);
  const CompareResult r = run_compare(opt, data, &out);
  const std::string table = r.table();
  out << "\n" << table;
  write_text(opt.out_dir / "compare.txt", table);
  write_text(opt.out_dir / "compare.csv", r.csv());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-task dense prediction with a tri-plane rendering regularizer", "tpmtl"};
  app.require_subcommand(1);

  DatasetSpec spec;
  std::string gen_out, gen_size = "64x64", pair_shift;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--size", gen_size, "Image size HxW");
  gen->add_option("--train", spec.train, "Training samples");
  gen->add_option("--test", spec.test, "Test samples");
  gen->add_option("--classes", spec.scene.num_classes, "Semantic classes including background");
  gen->add_flag("--paired", spec.paired, "Add a second view per sample");
  gen->add_option("--pair-shift", pair_shift, "Second-view translation x,y,z");
  gen->add_option("--seg-noise", spec.seg_noise, "Fraction of train pixels with a random class");
  gen->add_option("--depth-noise", spec.depth_noise, "Std of Gaussian noise on train depth");

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Train a model");
  add_train_flags(tr, tf);
  tr->add_option("--data", tf.data, "Dataset directory");
  tr->add_option("--out", tf.out, "Run directory");

  std::string ev_ckpt, ev_data, ev_split = "test", ev_out;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint index JSON")->required();
  ev->add_option("--data", ev_data, "Dataset directory")->required();
  ev->add_option("--split", ev_split, "train or test");
  ev->add_option("--out", ev_out, "Directory for report.json and report.txt");

  std::string rd_ckpt, rd_data, rd_ids, rd_out = "renders";
  std::optional<std::string> rd_size;
  std::optional<std::size_t> rd_samples;
  auto* rd = app.add_subcommand("render", "Render per-task maps from the regularizer branch");
  rd->add_option("--checkpoint", rd_ckpt, "Checkpoint index JSON")->required();
  rd->add_option("--data", rd_data, "Dataset directory")->required();
  rd->add_option("--ids", rd_ids, "Comma-separated sample ids")->required();
  rd->add_option("--out", rd_out, "Output directory");
  rd->add_option("--render-size", rd_size, "Render resolution HxW");
  rd->add_option("--samples", rd_samples, "Samples per ray");

  int gc_seeds = 20;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  gc->add_option("--seeds", gc_seeds, "Random seeds per check");

  TrainFlags cf;
  int cmp_seeds = 5;
  auto* cmp = app.add_subcommand("compare", "Paired trainings with and without the regularizer");
  add_train_flags(cmp, cf);
  cmp->add_option("--data", cf.data, "Dataset directory")->required();
  cmp->add_option("--out", cf.out, "Output directory");
  cmp->add_option("--seeds", cmp_seeds, "Number of seeds");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      if (auto subs = app.get_subcommands(); !subs.empty()) out << subs.front()->help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen) {
      std::tie(spec.height, spec.width) = parse_size(gen_size);
      spec.seed = gen_seed;
      if (!pair_shift.empty()) {
        const auto parts = split_list(pair_shift);
        if (parts.size() != 3) throw ConfigError("--pair-shift needs x,y,z");
        spec.pair_transform = RigidTransform::translate(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
      }
      return cmd_gen_data(gen_out, spec, out);
    }
    if (*tr) return cmd_train(tf, out);
    if (*ev) return cmd_eval(ev_ckpt, ev_data, ev_split, ev_out, out);
    if (*rd) return cmd_render(rd_ckpt, rd_data, rd_ids, rd_out, rd_size, rd_samples, out);
    if (*gc) return cmd_gradcheck(gc_seeds, out);
    if (*cmp) return cmd_compare(cf, cmp_seeds, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const CorruptionError& e) {
    err << "corrupt input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: bad number: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}

}  // namespace tpmtl
