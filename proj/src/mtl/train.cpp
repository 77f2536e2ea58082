#include "tpmtl/mtl/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "tpmtl/core/error.hpp"
#include "tpmtl/mtl/checkpoint.hpp"

namespace tpmtl {

using nlohmann::json;

namespace {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double lookup(const std::map<std::string, double>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? NAN : it->second;
}

LogRow make_row(long iter, const ObjectiveTerms& terms) {
  return LogRow{iter, terms.alpha, terms.total.item(), terms.main, terms.reg, terms.cross};
}

// Batches cycle through shuffled epochs of the train split.
class BatchSampler {
 public:
  BatchSampler(std::vector<const SampleRecord*> records, std::size_t batch_size, Rng rng)
      : records_(std::move(records)), batch_size_(batch_size), rng_(rng) {}

  std::vector<const SampleRecord*> next() {
    std::vector<const SampleRecord*> out;
    while (out.size() < batch_size_) {
      if (cursor_ == order_.size()) reshuffle();
      out.push_back(records_[order_[cursor_++]]);
    }
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(records_.size());
    std::iota(order_.begin(), order_.end(), 0);
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.uniform_int(0, i - 1)]);
    cursor_ = 0;
  }

  std::vector<const SampleRecord*> records_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

[[noreturn]] void abort_non_finite(MultiTaskModel& model, const Batch& batch, long iter, const ObjectiveTerms& terms,
                                   const std::filesystem::path& out_dir) {
  json losses = {{"main", terms.main}, {"reg", terms.reg}, {"cross", terms.cross}};
  const auto px = batch.images.data();
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  for (double v : px) lo = std::min(lo, v), hi = std::max(hi, v), sum += v;
  json norms = json::object();
  model.parameters([&](const std::string& name, Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    norms[name] = std::isfinite(s) ? json(std::sqrt(s)) : json("non-finite");
  });
  const json dump = {{"iter", iter},
                     {"alpha", terms.alpha},
                     {"losses", losses},
                     {"batch", {{"size", batch.size()}, {"image_min", lo}, {"image_max", hi},
                                {"image_mean", sum / static_cast<double>(px.size())}}},
                     {"parameter_norms", norms}};
  const auto path = out_dir / "diagnostic.json";
  std::ofstream(path) << dump.dump(2) << "\n";
  throw NumericalError("non-finite objective at iteration " + std::to_string(iter) + "; diagnostics in " +
                       path.string());
}

}  // namespace

std::string metrics_header(const std::vector<TaskSpec>& tasks) {
  std::string h = "iter,alpha,total";
  for (const TaskSpec& t : tasks) {
    const std::string n = t.name();
    h += "," + n + "_main_loss," + n + "_reg_loss," + n + "_crossview_loss";
  }
  return h;
}

std::string metrics_row(const LogRow& row, const std::vector<TaskSpec>& tasks) {
  std::string s = std::to_string(row.iter) + "," + number(row.alpha) + "," + number(row.total);
  for (const TaskSpec& t : tasks) {
    s += "," + number(lookup(row.main, t.name())) + "," + number(lookup(row.reg, t.name())) + "," +
         number(lookup(row.cross, t.name()));
  }
  return s;
}

TrainResult train(const TrainConfig& cfg, const Dataset& data, const TrainHooks& hooks) {
  cfg.validate();
  const auto records = data.split("train");
  if (records.empty()) throw ValidationError("dataset has no training samples");
  const ModelConfig mcfg = cfg.effective_model();
  if (cfg.cross_view) {
    for (const SampleRecord* r : records)
      if (!r->pair) throw ConfigError("cross-view training needs paired samples; " + r->id + " has none");
  }

  Rng root(cfg.seed);
  Rng model_rng = root.split();
  BatchSampler sampler(records, cfg.batch_size, root.split());
  Rng step_rng = root.split();

  TrainResult result;
  result.model = MultiTaskModel(mcfg, model_rng);
  MultiTaskModel& model = result.model;
  model.set_mode(Mode::train);

  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  result.metrics = out_dir / "metrics.csv";
  std::ofstream csv(result.metrics, std::ios::trunc);
  if (!csv) throw ValidationError("cannot write " + result.metrics.string());
  csv << metrics_header(mcfg.tasks) << "\n";

  ObjectiveOptions opts;
  opts.cross_view = cfg.cross_view;
  opts.sampling = hooks.sampling;
  const json run_info = {{"seed", cfg.seed}, {"config", to_json(cfg)}};
  auto log = [&](const LogRow& row) {
    csv << metrics_row(row, mcfg.tasks) << "\n";
    csv.flush();
    result.log.push_back(row);
    if (hooks.on_log) hooks.on_log(row);
  };
  auto checkpoint = [&](long iter, const std::string& name) {
    json extra = run_info;
    extra["iteration"] = iter;
    const auto path = out_dir / name;
    save_checkpoint(model, path, extra);
    return path;
  };

  Adam adam(cfg.adam);
  const RenderConfig& rc = mcfg.render;
  for (long iter = 0; iter < cfg.total_iters; ++iter) {
    const Batch batch = make_batch(sampler.next(), rc.height, rc.width);
    Tape tape;
    const auto scope = tape.activate();
    const ObjectiveTerms terms = objective(model, batch, iter, cfg.alpha, opts, step_rng);
    if (!std::isfinite(terms.total.item())) abort_non_finite(model, batch, iter, terms, out_dir);
    if (iter % cfg.log_every == 0) log(make_row(iter, terms));
    tape.backward(terms.total);
    const bool regularized = terms.alpha > 0.0;
    adam.step([&](const TensorVisitor& fn) {
      model.main_parameters(fn);
      if (regularized) {
        model.aux_parameters(fn);
        model.regularizer_parameters(fn);
      }
    });
    model.parameters([](const std::string&, Tensor& t) {
      if (t.has_grad()) t.zero_grad();
    });
    if ((iter + 1) % cfg.checkpoint_every == 0 && iter + 1 < cfg.total_iters) {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%06ld.json", iter + 1);
      checkpoint(iter + 1, name);
    }
  }

  // Final row: objective after the last update, leaving running statistics
  // untouched.
  {
    std::vector<std::vector<double>> saved;
    model.buffers([&](const std::string&, Tensor& t) { saved.emplace_back(t.data().begin(), t.data().end()); });
    Rng eval_rng = step_rng.split();
    const Batch batch = make_batch(sampler.next(), rc.height, rc.width);
    const ObjectiveTerms terms = objective(model, batch, cfg.total_iters, cfg.alpha, opts, eval_rng);
    std::size_t k = 0;
    model.buffers([&](const std::string&, Tensor& t) {
      std::copy(saved[k].begin(), saved[k].end(), t.mutable_data().begin());
      ++k;
    });
    if (!std::isfinite(terms.total.item())) abort_non_finite(model, batch, cfg.total_iters, terms, out_dir);
    log(make_row(cfg.total_iters, terms));
  }
  result.checkpoint = checkpoint(cfg.total_iters, "final.json");
  return result;
}

}  // namespace tpmtl
