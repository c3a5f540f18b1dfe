//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point. Exit codes: 0 success, 2 for input errors
// (bad arguments, unparseable files, bad config, checkpoint mismatch),
// 1 for runtime failures.

#pragma once

namespace cpiformer {

int run_cli(int argc, const char *const *argv);

}  // namespace cpiformer
