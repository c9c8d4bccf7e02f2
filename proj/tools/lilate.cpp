#include <iostream>

#include "lilate/cli.hpp"

int main(int argc, char** argv) { return lilate::cli::main_entry(argc, argv, std::cout, std::cerr); }
