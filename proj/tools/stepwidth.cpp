// Copyright 2026 The stepwidth Authors
// SPDX-License-Identifier: Apache-2.0

#include "stepwidth/cli.hpp"

int main(int argc, char** argv) { return stepwidth::cli_main(argc, argv); }
