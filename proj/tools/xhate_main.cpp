#include <vector>

#include "xhate/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return xhate::cli_main(args);
}
