#include "sprinkle/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return sprinkle::cli_main(argc, argv, std::cout, std::cerr);
}
