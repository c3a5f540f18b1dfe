//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#include "cpiformer/cli.hpp"

int main(int argc, char **argv) { return cpiformer::run_cli(argc, argv); }
