#include <iostream>

#include "congestion/cli.h"

int main(int argc, char** argv) { return congestion::run_cli(argc, argv, std::cout, std::cerr); }
