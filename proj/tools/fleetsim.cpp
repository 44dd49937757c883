#include <iostream>

#include "fleet/cli.hpp"

int main(int argc, char** argv) { return fleet::dispatch(argc, argv, std::cout, std::cerr); }
