// SPDX-License-Identifier: Apache-2.0
//
// Entry point of the `lora_lab` command-line tool, callable in-process.

#pragma once

#include <iosfwd>

namespace lora_lab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Parses `argv` and runs one subcommand. Reports go to `out`, diagnostics
/// to `err`. Returns 0 on success, 2 for invalid flags, configs or inputs,
/// and 3 for failures while running.
/// Keeps freed activation buffers in the heap instead of returning them to
/// the OS, so training steps do not page-fault on every large allocation.
/// Call once at process start; a no-op outside glibc.
void configure_allocator();

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lora_lab::cli
