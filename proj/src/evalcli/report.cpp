#include "tpmtl/evalcli/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tpmtl/core/error.hpp"
#include "tpmtl/evalcli/metrics.hpp"
#include "tpmtl/mtl/config.hpp"

namespace tpmtl {

using nlohmann::json;

namespace {

const char* metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::segmentation: return "miou";
    case TaskKind::depth: return "rmse";
    case TaskKind::normal: return "merr_deg";
    case TaskKind::boundary: return "odsf_lite";
  }
  return "?";
}

std::vector<int> argmax_rows(std::span<const double> v, std::size_t dim) {
  std::vector<int> out(v.size() / dim);
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < dim; ++k)
      if (v[r * dim + k] > v[r * dim + best]) best = k;
    out[r] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> to_int(const std::vector<float>& v) {
  std::vector<int> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<int>(std::lround(v[i]));
  return out;
}

std::vector<double> to_double(const std::vector<float>& v) { return {v.begin(), v.end()}; }

std::vector<std::uint8_t> unit_mask(const std::vector<double>& normals) {
  std::vector<std::uint8_t> mask(normals.size() / 3);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double* n = normals.data() + 3 * i;
    mask[i] = n[0] * n[0] + n[1] * n[1] + n[2] * n[2] > 1e-18;
  }
  return mask;
}

void check_prediction(const TaskSpec& t, const Tensor& p, const ViewLabels& v) {
  if (p.numel() != v.height * v.width * t.value_dim)
    throw ValidationError(t.name() + " prediction " + shape_str(p.shape()) + " does not match " +
                          std::to_string(v.height) + "x" + std::to_string(v.width) + " labels");
}

}  // namespace

std::optional<double> MetricReport::value(const std::string& task) const {
  for (const MetricEntry& e : entries)
    if (e.task == task) return e.value;
  return std::nullopt;
}

json MetricReport::to_json() const {
  json metrics = json::object();
  for (const MetricEntry& e : entries) metrics[e.task] = {{"metric", e.metric}, {"value", e.value}};
  return {{"split", split},
          {"samples", samples},
          {"config_digest", config_digest},
          {"boundary_protocol", "odsF-lite: max F1 over thresholds 0.05..0.95, 1 px tolerance"},
          {"metrics", metrics}};
}

std::string MetricReport::table() const {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %-10s %12s\n", "task", "metric", "value");
  out << line;
  for (const MetricEntry& e : entries) {
    std::snprintf(line, sizeof line, "%-14s %-10s %12.4f\n", e.task.c_str(), e.metric.c_str(), e.value);
    out << line;
  }
  std::snprintf(line, sizeof line, "(%s, %zu samples, config %s)\n", split.c_str(), samples, config_digest.c_str());
  out << line;
  return out.str();
}

MetricReport score_predictions(const std::vector<TaskSpec>& tasks,
                               const std::vector<std::map<std::string, Tensor>>& predictions,
                               const std::vector<const ViewLabels*>& labels) {
  if (predictions.size() != labels.size())
    throw ValidationError("have " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labelled samples");
  MetricReport report;
  report.samples = labels.size();
  for (const TaskSpec& t : tasks) {
    // pixels of all samples are pooled in sample order
    std::vector<int> seg_pred, seg_gt;
    std::vector<double> pred, gt;
    std::vector<BoundaryMap> maps;
    for (std::size_t s = 0; s < labels.size(); ++s) {
      const ViewLabels& v = *labels[s];
      const Tensor& p = predictions[s].at(t.name());
      check_prediction(t, p, v);
      switch (t.kind) {
        case TaskKind::segmentation: {
          const auto a = argmax_rows(p.data(), t.value_dim);
          seg_pred.insert(seg_pred.end(), a.begin(), a.end());
          const auto g = to_int(v.seg);
          seg_gt.insert(seg_gt.end(), g.begin(), g.end());
          break;
        }
        case TaskKind::depth:
          pred.insert(pred.end(), p.data().begin(), p.data().end());
          gt.insert(gt.end(), v.depth.begin(), v.depth.end());
          break;
        case TaskKind::normal:
          pred.insert(pred.end(), p.data().begin(), p.data().end());
          gt.insert(gt.end(), v.normal.begin(), v.normal.end());
          break;
        case TaskKind::boundary:
          maps.push_back({v.height, v.width, {p.data().begin(), p.data().end()}, to_double(v.boundary)});
          break;
      }
    }
    double value = 0.0;
    switch (t.kind) {
      case TaskKind::segmentation: value = miou(seg_pred, seg_gt, static_cast<int>(t.value_dim)); break;
      case TaskKind::depth: value = rmse_depth(pred, gt); break;
      case TaskKind::normal: value = mean_angular_error(pred, gt, unit_mask(gt)); break;
      case TaskKind::boundary: value = boundary_f1(maps, 1); break;
    }
    report.entries.push_back({t.name(), metric_name(t.kind), value});
  }
  return report;
}

MetricReport evaluate(MultiTaskModel& model, const std::vector<const SampleRecord*>& records, std::size_t batch_size) {
  if (records.empty()) throw ValidationError("no samples to evaluate");
  if (batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  const Mode saved = model.mode();
  model.set_mode(Mode::eval);
  std::vector<std::map<std::string, Tensor>> preds;
  std::vector<const ViewLabels*> labels;
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, records.size() - start);
    const ViewLabels& first = records[start]->view;
    const std::size_t H = first.height, W = first.width;
    std::vector<double> img;
    img.reserve(n * 3 * H * W);
    for (std::size_t i = 0; i < n; ++i) {
      const ViewLabels& v = records[start + i]->view;
      if (v.height != H || v.width != W) throw ValidationError("samples of one batch differ in size");
      img.insert(img.end(), v.image.begin(), v.image.end());
      labels.push_back(&v);
    }
    const auto out = forward_main(model, Tensor({n, 3, H, W}, std::move(img)));
    for (std::size_t i = 0; i < n; ++i) {
      std::map<std::string, Tensor> one;
      for (const TaskSpec& t : model.tasks()) one.emplace(t.name(), slice(out.at(t.name()), 0, i, i + 1));
      preds.push_back(std::move(one));
    }
  }
  model.set_mode(saved);
  MetricReport report = score_predictions(model.tasks(), preds, labels);
  report.split = records.front()->split;
  report.config_digest = config_digest(to_json(model.config()));
  return report;
}

std::string config_digest(const json& doc) {
  // FNV-1a over the canonical dump (object keys are sorted)
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RenderScores score_render(const RenderOutput& render, const std::vector<TaskSpec>& tasks, const ViewLabels& truth) {
  const std::size_t P = truth.height * truth.width;
  if (render.rays.num_rays() != P)
    throw ValidationError("render has " + std::to_string(render.rays.num_rays()) + " rays for " + std::to_string(P) +
                          " label pixels");
  RenderScores s;
  const std::vector<double> depth_gt = to_double(truth.depth);
  const Tensor d = depth_from_density(render.weights, render.rays.t_samples);
  s.density_depth_rmse = rmse_depth(d.data(), depth_gt);
  for (const TaskSpec& t : tasks) {
    const Tensor& p = render.predictions.at(t.name());
    check_prediction(t, p, truth);
    switch (t.kind) {
      case TaskKind::segmentation:
        s.seg_accuracy = pixel_accuracy(argmax_rows(p.data(), t.value_dim), to_int(truth.seg));
        break;
      case TaskKind::depth: s.depth_rmse = rmse_depth(p.data(), depth_gt); break;
      case TaskKind::normal: {
        const std::vector<double> gt = to_double(truth.normal);
        s.normal_merr_deg = mean_angular_error(p.data(), gt, unit_mask(gt));
        break;
      }
      case TaskKind::boundary: break;
    }
  }
  return s;
}

}  // namespace tpmtl
