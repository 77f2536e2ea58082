#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tpmtl/scenes/scene.hpp"

namespace tpmtl {

struct DatasetSpec {
  SceneParams scene;
  std::size_t height = 64, width = 64;
  std::size_t train = 64, test = 16;
  bool paired = false;
  RigidTransform pair_transform = RigidTransform::translate(0.2, 0.0, 0.0);
  /// Label noise applied to the train split only.
  double seg_noise = 0.0;
  double depth_noise = 0.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<SampleRecord> records;

  std::vector<const SampleRecord*> split(const std::string& name) const;
};

/// Scenes whose paired view leaves the frustum are regenerated (up to a
/// retry cap, after which a warning is printed and the pair kept).
Dataset generate_dataset(const DatasetSpec& spec);

/// manifest.json plus {id}/{image,seg,depth,normal,boundary}.f32 and, for
/// pairs, pair_*.f32 and delta_v.json. Float32, little-endian.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace tpmtl
