#include "tpmtl/scenes/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "tpmtl/core/binary_io.hpp"

namespace tpmtl {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "tpmtl-dataset-v1";
constexpr int kPairRetries = 100;

json transform_json(const RigidTransform& t) {
  return {{"rotation", t.rotation}, {"translation", t.translation}};
}

RigidTransform transform_from(const json& j) {
  RigidTransform t;
  t.rotation = j.at("rotation").get<std::array<double, 9>>();
  t.translation = j.at("translation").get<Vec3>();
  return t;
}

struct Channel {
  const char* name;
  std::vector<float> ViewLabels::*field;
  int kind;  // 0: [3,H,W], 1: [H,W], 2: [H,W,3]
};

constexpr Channel kChannels[] = {
    {"image", &ViewLabels::image, 0},   {"seg", &ViewLabels::seg, 1},           {"depth", &ViewLabels::depth, 1},
    {"normal", &ViewLabels::normal, 2}, {"boundary", &ViewLabels::boundary, 1},
};

std::vector<std::size_t> channel_shape(const Channel& c, std::size_t h, std::size_t w) {
  if (c.kind == 0) return {3, h, w};
  if (c.kind == 2) return {h, w, 3};
  return {h, w};
}

json write_view(const ViewLabels& v, const std::filesystem::path& dir, const std::string& prefix) {
  json files = json::object();
  for (const Channel& c : kChannels) {
    const auto shape = channel_shape(c, v.height, v.width);
    const std::vector<float>& data = v.*c.field;
    io::write_file(dir / (prefix + c.name + ".f32"), std::span<const float>(data));
    files[c.name] = {{"shape", shape}, {"file", prefix + c.name + ".f32"}};
  }
  return {{"height", v.height}, {"width", v.width}, {"pose", transform_json(v.pose)}, {"files", files}};
}

ViewLabels read_view(const json& j, const std::filesystem::path& dir, const std::string& id) {
  ViewLabels v;
  try {
    v.height = j.at("height").get<std::size_t>();
    v.width = j.at("width").get<std::size_t>();
    v.pose = transform_from(j.at("pose"));
  } catch (const json::exception& e) {
    throw CorruptionError("sample " + id + ": malformed view entry (" + e.what() + ")");
  }
  for (const Channel& c : kChannels) {
    const auto expected = channel_shape(c, v.height, v.width);
    std::vector<std::size_t> shape;
    std::string file;
    try {
      const json& f = j.at("files").at(c.name);
      shape = f.at("shape").get<std::vector<std::size_t>>();
      file = f.at("file").get<std::string>();
    } catch (const json::exception& e) {
      throw CorruptionError("sample " + id + ": missing entry for " + c.name);
    }
    if (shape != expected) throw CorruptionError("sample " + id + ": " + c.name + " shape disagrees with view size");
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    v.*c.field = io::read_file<float>(dir / file, n, "sample " + id);
  }
  return v;
}

}  // namespace

std::vector<const SampleRecord*> Dataset::split(const std::string& name) const {
  std::vector<const SampleRecord*> out;
  for (const SampleRecord& r : records)
    if (r.split == name) out.push_back(&r);
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  Dataset data;
  data.spec = spec;
  Rng root(spec.seed);
  const std::size_t total = spec.train + spec.test;
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng = root.split();
    const bool is_train = i < spec.train;
    SampleRecord rec;
    if (spec.paired) {
      bool ok = false;
      for (int attempt = 0; attempt < kPairRetries && !ok; ++attempt) {
        const Scene scene = generate_scene(rng, spec.scene);
        rec = make_pair(scene, Camera{}, spec.pair_transform, spec.height, spec.width, &ok);
      }
      if (!ok) std::fprintf(stderr, "warning: sample %zu keeps a pair that leaves the frustum\n", i);
    } else {
      const Scene scene = generate_scene(rng, spec.scene);
      rec.view = trace_labels(scene, Camera{}, spec.height, spec.width);
    }
    char id[32];
    std::snprintf(id, sizeof id, "%s_%04zu", is_train ? "train" : "test", is_train ? i : i - spec.train);
    rec.id = id;
    rec.split = is_train ? "train" : "test";
    if (is_train) perturb_labels(rec, spec.seg_noise, spec.depth_noise, spec.scene.num_classes, rng);
    data.records.push_back(std::move(rec));
  }
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const DatasetSpec& s = data.spec;
  json manifest = {
      {"format", kFormat},
      {"num_classes", s.scene.num_classes},
      {"seed", s.seed},
      {"height", s.height},
      {"width", s.width},
      {"generator",
       {{"min_objects", s.scene.min_objects},
        {"max_objects", s.scene.max_objects},
        {"min_size", s.scene.min_size},
        {"max_size", s.scene.max_size},
        {"train", s.train},
        {"test", s.test},
        {"paired", s.paired},
        {"pair_transform", transform_json(s.pair_transform)},
        {"seg_noise", s.seg_noise},
        {"depth_noise", s.depth_noise}}},
  };
  json samples = json::array();
  for (const SampleRecord& r : data.records) {
    const auto sdir = dir / r.id;
    std::filesystem::create_directories(sdir);
    json entry = {{"id", r.id}, {"split", r.split}, {"view", write_view(r.view, sdir, "")}};
    if (r.pair) {
      entry["pair"] = write_view(*r.pair, sdir, "pair_");
      std::ofstream(sdir / "delta_v.json") << transform_json(r.delta_v).dump(2) << "\n";
    }
    samples.push_back(entry);
  }
  manifest["samples"] = samples;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ValidationError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ValidationError("no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("manifest.json is not valid JSON: ") + e.what());
  }
  if (m.value("format", "") != kFormat) throw CorruptionError("manifest.json has unknown format");
  Dataset data;
  DatasetSpec& s = data.spec;
  try {
    s.scene.num_classes = m.at("num_classes").get<int>();
    s.seed = m.at("seed").get<std::uint64_t>();
    s.height = m.at("height").get<std::size_t>();
    s.width = m.at("width").get<std::size_t>();
    const json& g = m.at("generator");
    s.scene.min_objects = g.at("min_objects").get<int>();
    s.scene.max_objects = g.at("max_objects").get<int>();
    s.scene.min_size = g.at("min_size").get<double>();
    s.scene.max_size = g.at("max_size").get<double>();
    s.train = g.at("train").get<std::size_t>();
    s.test = g.at("test").get<std::size_t>();
    s.paired = g.at("paired").get<bool>();
    s.pair_transform = transform_from(g.at("pair_transform"));
    s.seg_noise = g.at("seg_noise").get<double>();
    s.depth_noise = g.at("depth_noise").get<double>();
  } catch (const json::exception& e) {
    throw CorruptionError(std::string("manifest.json is missing fields: ") + e.what());
  }
  for (const json& entry : m.at("samples")) {
    SampleRecord r;
    r.id = entry.value("id", "");
    if (r.id.empty()) throw CorruptionError("manifest sample without id");
    r.split = entry.value("split", "train");
    const auto sdir = dir / r.id;
    if (!entry.contains("view")) throw CorruptionError("sample " + r.id + ": no view entry");
    r.view = read_view(entry.at("view"), sdir, r.id);
    if (entry.contains("pair")) {
      r.pair = read_view(entry.at("pair"), sdir, r.id);
      std::ifstream dv(sdir / "delta_v.json");
      if (!dv) throw CorruptionError("sample " + r.id + ": missing delta_v.json");
      try {
        r.delta_v = transform_from(json::parse(dv));
      } catch (const json::exception& e) {
        throw CorruptionError("sample " + r.id + ": malformed delta_v.json");
      }
    }
    data.records.push_back(std::move(r));
  }
  return data;
}

}  // namespace tpmtl
