#include <iostream>

#include "qvh_cli/commands.hpp"

int main(int argc, char** argv)
{
    return qvh::cli::run(argc, argv, std::cout, std::cerr);
}
