#include "tpmtl/mtl/checkpoint.hpp"

#include <fstream>

#include "tpmtl/core/binary_io.hpp"
#include "tpmtl/mtl/config.hpp"

namespace tpmtl {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "tpmtl-v1";
}  // namespace

void save_checkpoint(MultiTaskModel& model, const std::filesystem::path& index, const json& extra) {
  if (index.has_parent_path()) std::filesystem::create_directories(index.parent_path());
  std::filesystem::path blob = index;
  blob.replace_extension(".bin");
  std::ofstream out(blob, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + blob.string());
  json tensors = json::object();
  std::size_t offset = 0;
  auto write = [&](const char* kind) {
    return [&, kind](const std::string& name, Tensor& t) {
      tensors[name] = {{"shape", t.shape()}, {"offset", offset}, {"kind", kind}};
      io::write_le(out, t.data());
      offset += t.numel() * sizeof(double);
    };
  };
  model.parameters(write("parameter"));
  model.buffers(write("buffer"));
  if (!out) throw ValidationError("failed writing " + blob.string());
  const json doc = {{"format", kFormat},
                    {"blob", blob.filename().string()},
                    {"blob_bytes", offset},
                    {"model", to_json(model.config())},
                    {"tensors", tensors},
                    {"extra", extra}};
  std::ofstream idx(index, std::ios::trunc);
  if (!idx) throw ValidationError("cannot write " + index.string());
  idx << doc.dump(2) << "\n";
}

namespace {

MultiTaskModel read_tensors(const json& doc, const std::filesystem::path& index) {
  const json& tensors = doc.at("tensors");
  const std::filesystem::path blob = index.parent_path() / doc.at("blob").get<std::string>();
  std::error_code ec;
  const auto blob_size = std::filesystem::file_size(blob, ec);
  if (ec) throw CorruptionError("checkpoint blob " + blob.string() + " is missing");
  if (blob_size != doc.at("blob_bytes").get<std::size_t>())
    throw CorruptionError("checkpoint blob " + blob.string() + " has " + std::to_string(blob_size) +
                          " bytes, index expects " + std::to_string(doc.at("blob_bytes").get<std::size_t>()));
  std::ifstream data(blob, std::ios::binary);

  Rng rng(0);
  MultiTaskModel model(model_config_from_json(doc.at("model")), rng);
  auto load = [&](const std::string& name, Tensor& t) {
    if (!tensors.contains(name)) throw CorruptionError("checkpoint lacks tensor '" + name + "'");
    const json& e = tensors.at(name);
    if (e.at("shape").get<Shape>() != t.shape()) {
      throw CorruptionError("checkpoint tensor '" + name + "' has the wrong shape");
    }
    const std::size_t offset = e.at("offset").get<std::size_t>();
    if (offset + t.numel() * sizeof(double) > blob_size) {
      throw CorruptionError("checkpoint tensor '" + name + "' runs past the end of the blob");
    }
    data.seekg(static_cast<std::streamoff>(offset));
    io::read_le(data, t.mutable_data());
    if (!data) throw CorruptionError("short read for checkpoint tensor '" + name + "'");
  };
  model.parameters(load);
  model.buffers(load);
  model.set_mode(Mode::eval);
  return model;
}

}  // namespace

MultiTaskModel load_checkpoint(const std::filesystem::path& index) {
  std::ifstream in(index);
  if (!in) throw ValidationError("cannot read checkpoint " + index.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptionError("checkpoint index is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object() || doc.value("format", "") != kFormat)
    throw CorruptionError("checkpoint format is not " + std::string(kFormat));
  try {
    return read_tensors(doc, index);
  } catch (const json::exception& e) {
    throw CorruptionError("malformed checkpoint index " + index.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CorruptionError("checkpoint holds an invalid model configuration: " + std::string(e.what()));
  } catch (const DimensionError& e) {
    throw CorruptionError("checkpoint holds an invalid model configuration: " + std::string(e.what()));
  }
}

}  // namespace tpmtl
