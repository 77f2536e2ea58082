#include "tpmtl/evalcli/compare.hpp"

#include <cstdio>
#include <sstream>

#include "tpmtl/core/error.hpp"
#include "tpmtl/mtl/train.hpp"

namespace tpmtl {

namespace {

std::string alpha_name(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "alpha%g", alpha);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> task_names(const CompareResult& r) {
  std::vector<std::string> names;
  if (!r.runs.empty())
    for (const MetricEntry& e : r.runs.front().report.entries) names.push_back(e.task);
  return names;
}

const CompareRun* find_run(const CompareResult& r, const std::string& condition, int seed) {
  for (const CompareRun& run : r.runs)
    if (run.condition == condition && run.seed == seed) return &run;
  return nullptr;
}

std::vector<int> seeds_of(const CompareResult& r) {
  std::vector<int> seeds;
  for (const CompareRun& run : r.runs)
    if (run.condition == r.conditions.front()) seeds.push_back(run.seed);
  return seeds;
}

// (condition, seed-or-"mean", values per task) rows in output order.
struct Row {
  std::string section, condition, seed;
  std::vector<double> values;
};

std::vector<Row> rows(const CompareResult& r) {
  const auto tasks = task_names(r);
  const auto seeds = seeds_of(r);
  std::vector<Row> out;
  auto values = [&](const CompareRun& run) {
    std::vector<double> v;
    for (const std::string& t : tasks) v.push_back(run.report.value(t).value_or(0.0));
    return v;
  };
  auto add_mean = [&](const std::string& section, const std::string& cond, std::size_t first) {
    std::vector<double> mean(tasks.size(), 0.0);
    for (std::size_t i = first; i < out.size(); ++i)
      for (std::size_t k = 0; k < tasks.size(); ++k) mean[k] += out[i].values[k];
    for (double& m : mean) m /= static_cast<double>(out.size() - first);
    out.push_back({section, cond, "mean", mean});
  };
  for (const std::string& cond : r.conditions) {
    const std::size_t first = out.size();
    for (int s : seeds) out.push_back({"metric", cond, std::to_string(s), values(*find_run(r, cond, s))});
    add_mean("metric", cond, first);
  }
  const std::string& ref = r.conditions.front();
  for (std::size_t c = 1; c < r.conditions.size(); ++c) {
    const std::string label = r.conditions[c] + "-" + ref;
    const std::size_t first = out.size();
    for (int s : seeds) {
      std::vector<double> a = values(*find_run(r, r.conditions[c], s));
      const std::vector<double> b = values(*find_run(r, ref, s));
      for (std::size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
      out.push_back({"delta", label, std::to_string(s), a});
    }
    add_mean("delta", label, first);
  }
  return out;
}

}  // namespace

std::string CompareResult::table() const {
  if (runs.empty()) return "no runs\n";
  std::ostringstream out;
  char line[256];
  const auto tasks = task_names(*this);
  std::string section;
  for (const Row& row : rows(*this)) {
    if (row.section != section) {
      section = row.section;
      out << (section == "metric" ? "held-out metrics\n" : "\npaired deltas\n");
      std::snprintf(line, sizeof line, "%-22s %-6s", "condition", "seed");
      out << line;
      for (const std::string& t : tasks) {
        std::snprintf(line, sizeof line, " %13s", t.c_str());
        out << line;
      }
      out << "\n";
    }
    std::snprintf(line, sizeof line, "%-22s %-6s", row.condition.c_str(), row.seed.c_str());
    out << line;
    for (double v : row.values) {
      std::snprintf(line, sizeof line, " %13s", fmt(v).c_str());
      out << line;
    }
    out << "\n";
  }
  if (conditions.size() > 1)
    out << "\n" << conditions[1] << " depth RMSE <= " << conditions.front() << " in " << depth_wins << "/"
        << seeds_of(*this).size() << " seeds\n";
  return out.str();
}

std::string CompareResult::csv() const {
  std::ostringstream out;
  out << "section,condition,seed";
  for (const std::string& t : task_names(*this)) out << "," << t;
  out << "\n";
  for (const Row& row : rows(*this)) {
    out << row.section << "," << row.condition << "," << row.seed;
    char buf[32];
    for (double v : row.values) {
      std::snprintf(buf, sizeof buf, "%.10g", v);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

CompareResult run_compare(const CompareOptions& options, const Dataset& data, std::ostream* progress) {
  if (options.seeds < 1) throw ConfigError("compare needs at least one seed");
  if (!(options.alpha > 0.0)) throw ConfigError("compare needs a positive alpha");
  const auto test = data.split("test");
  if (test.empty()) throw ValidationError("compare needs a non-empty test split");

  struct Condition {
    std::string name;
    double alpha;
    bool aux;
  };
  std::vector<Condition> conditions{{"alpha0", 0.0, false}, {alpha_name(options.alpha), options.alpha, false}};
  if (options.aux_heads) conditions.push_back({"aux", options.alpha, true});

  CompareResult result;
  for (const Condition& c : conditions) result.conditions.push_back(c.name);
  TrainHooks hooks;
  hooks.sampling = options.sampling;
  for (int s = 0; s < options.seeds; ++s) {
    for (const Condition& c : conditions) {
      TrainConfig cfg = options.base;
      cfg.seed = options.base.seed + static_cast<std::uint64_t>(s);
      cfg.alpha.alpha_max = c.alpha;
      cfg.aux_heads_baseline = c.aux;
      cfg.out_dir = (options.out_dir / (c.name + "_seed" + std::to_string(s))).string();
      cfg.validate();
      if (progress) *progress << "training " << c.name << " seed " << s << "\n" << std::flush;
      TrainResult trained = train(cfg, data, hooks);
      MetricReport report = evaluate(trained.model, test);
      if (progress) *progress << report.table() << std::flush;
      result.runs.push_back({c.name, s, std::move(report)});
    }
    const CompareRun* base = find_run(result, conditions[0].name, s);
    const CompareRun* reg = find_run(result, conditions[1].name, s);
    const auto a = reg->report.value("depth"), b = base->report.value("depth");
    if (a && b && *a <= *b) ++result.depth_wins;
  }
  return result;
}

}  // namespace tpmtl
