// Copyright 2026 The omvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "omvae/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return omvae::cli_dispatch(args, std::cout, std::cerr);
}
