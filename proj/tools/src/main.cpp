#include <iostream>
#include <string>
#include <vector>

#include "popmsg/cli/cli.hpp"

int main(int argc, char** argv) {
    return popmsg::cli::main_entry(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
