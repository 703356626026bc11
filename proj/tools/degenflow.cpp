#include "degenflow/cli.hpp"

int main(int argc, char** argv) { return degenflow::cli::run(argc, argv); }
