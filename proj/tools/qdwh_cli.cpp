#include <string>
#include <vector>

#include "qdwh/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qdwh::cli::run(args);
}
