// Writes the synthetic retrieval corpora used by the tests:
//   make_fixtures OUT_DIR
// creates OUT_DIR/separable (3 classes x 20) and OUT_DIR/oracle (12 images),
// each with a truth.json ground-truth file.

#include "synthetic.hpp"

#include <fmt/format.h>

#include <exception>

int main(int argc, char** argv) {
    if (argc != 2) {
        fmt::print(stderr, "usage: make_fixtures OUT_DIR\n");
        return 1;
    }
    try {
        const std::filesystem::path out = argv[1];
        cbir::fixtures::write_corpus(out / "separable", cbir::fixtures::separable_corpus());
        cbir::fixtures::write_corpus(out / "oracle", cbir::fixtures::oracle_corpus());
        fmt::print("wrote fixtures to {}\n", out.string());
    } catch (const std::exception& e) {
        fmt::print(stderr, "make_fixtures: {}\n", e.what());
        return 2;
    }
    return 0;
}
