// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gradnorm/linalg.hpp"

namespace gradnorm::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kConfigError = 2,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Newline-delimited decimal scores, 17 significant digits.
void write_scores(const std::filesystem::path& path, std::span<const double> scores);
Vector read_scores(const std::filesystem::path& path);

// GRADNORM_OOD_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

}  // namespace gradnorm::cli
