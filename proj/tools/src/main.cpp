// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lora_lab_cli/cli.hpp"

int main(int argc, char** argv) {
    lora_lab::cli::configure_allocator();
    return lora_lab::cli::run(argc, argv, std::cout, std::cerr);
}
