#include "tpmtl/core/runtime.hpp"

#include <malloc.h>

#include <cstdlib>
#include <string>

#include "tpmtl/core/error.hpp"
#include "tpmtl/kernels/kernels.hpp"

namespace tpmtl {

void init_runtime() {
  // Tensors of a few MB are allocated and freed every op; serving them from
  // mmap costs a page fault per 4 KB on every use.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);

  if (const char* env = std::getenv("TPMTL_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n <= 0 || n > 4096)
      throw ConfigError("TPMTL_THREADS must be a positive integer, got '" + std::string(env) + "'");
    kernels::set_max_threads(static_cast<int>(n));
  }
}

}  // namespace tpmtl
