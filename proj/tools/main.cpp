#include <iostream>

#include "ckor/cli.hpp"

int main(int argc, char** argv)
{
    return ckor::run_cli(argc, argv, std::cout, std::cerr);
}
