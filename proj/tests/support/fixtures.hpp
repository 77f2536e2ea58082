#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "tpmtl/mtl/model.hpp"
#include "tpmtl/scenes/dataset.hpp"

namespace tpmtl::testing {

// Narrow model for fast tests: 16x16 inputs give 4x4 tri-planes.
inline ModelConfig small_model() {
  ModelConfig m;
  m.tasks = default_tasks(3);
  m.encoder_channels = {4, 8, 8, 8};
  m.head_hidden = 4;
  m.triplane.in_channels = 8;
  m.triplane.plane_channels = 4;
  m.field.feature_dim = 4;
  m.field.hidden = 8;
  m.render.height = 8;
  m.render.width = 8;
  m.render.samples = 8;
  return m;
}

inline DatasetSpec small_dataset(std::size_t train = 2, std::size_t test = 1, bool paired = false) {
  DatasetSpec d;
  d.scene.num_classes = 3;
  d.height = 16;
  d.width = 16;
  d.train = train;
  d.test = test;
  d.paired = paired;
  d.seed = 11;
  return d;
}

// Fresh directory named after the running test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "tpmtl_tests" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace tpmtl::testing
