#include <iostream>

#include "logsplit_cli/cli.hpp"

int main(int argc, char** argv) { return logsplit::cli::run(argc, argv, std::cout, std::cerr); }
