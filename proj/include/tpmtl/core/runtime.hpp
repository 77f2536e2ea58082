#pragma once

namespace tpmtl {

/// Process-wide setup for entry points: keeps large tensor buffers on the
/// heap instead of fresh mmap pages, and applies the TPMTL_THREADS cap.
/// Throws ConfigError when TPMTL_THREADS is set but not a positive integer.
void init_runtime();

}  // namespace tpmtl
