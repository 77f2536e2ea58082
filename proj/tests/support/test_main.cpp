#include <gtest/gtest.h>

#include "tpmtl/core/runtime.hpp"

int main(int argc, char** argv) {
  tpmtl::init_runtime();
  testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
