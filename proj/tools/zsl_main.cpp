#include "zsl/cli.hpp"

int main(int argc, char** argv) { return zsl::cli::run(argc, argv); }
