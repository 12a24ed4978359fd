#include "cbir/cli.hpp"

int main(int argc, char** argv) {
    return cbir::cli::run(argc, argv);
}
