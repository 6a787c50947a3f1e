#include <string>
#include <vector>

#include "specfit/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return specfit::run_cli(args);
}
