// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "topoledger/cli.h"

int main(int argc, char** argv) {
  return topoledger::run_cli(argc, argv, std::cout, std::cerr);
}
