#include "tcrank/cli.hpp"

int main(int argc, char** argv) {
    return tcrank::run_cli(argc, argv);
}
