#include "sturmian/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sturmian::run_cli(argc, argv, std::cout, std::cerr); }
