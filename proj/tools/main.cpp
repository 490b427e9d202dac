#include <iostream>

#include "mfv/cli.hpp"

int main(int argc, char** argv)
{
    return mfv::run(argc, argv, std::cout, std::cerr);
}
