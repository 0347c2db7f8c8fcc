#include <string>
#include <vector>

#include "lcmon/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lcmon::run_cli(args);
}
