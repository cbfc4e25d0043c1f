#include "plotminer/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return plotminer::cli::run_cli(argc, argv, std::cout, std::cerr);
}
