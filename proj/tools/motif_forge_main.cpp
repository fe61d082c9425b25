#include <string>
#include <vector>

#include "mforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return mforge::cli::run(args);
}
