#pragma once

#include <filesystem>
#include <json.hpp>

#include "tpmtl/mtl/model.hpp"

namespace tpmtl {

/// Writes `index` (JSON, format "tpmtl-v1") and a sibling float64
/// little-endian blob with the same stem and a .bin extension. The index maps
/// each tensor name to its shape and byte offset; `extra` is stored verbatim.
void save_checkpoint(MultiTaskModel& model, const std::filesystem::path& index, const nlohmann::json& extra = {});

/// Rebuilds the model from the stored configuration and tensors.
MultiTaskModel load_checkpoint(const std::filesystem::path& index);

}  // namespace tpmtl
