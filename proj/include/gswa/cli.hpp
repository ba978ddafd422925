// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gswa/pipeline.hpp"

namespace gswa::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,  // verification failed or an internal numeric error
  kInputError = 2,
  kConfigError = 3,
  kInfeasible = 4,
  kIoError = 5,
};

struct RunConfig {
  PipelineConfig pipeline;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> params;  // load instead of initialising
  bool emit_tiles = false;
  std::size_t jobs = 1;
};

/// Maps a library exception to its exit code.
int exit_code_for(const std::exception& e);

/// Parses `argv` and runs one subcommand: tile, weigh, ablate, init-params or verify.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gswa::cli
