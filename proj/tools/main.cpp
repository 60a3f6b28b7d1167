#include "cli/cli.hpp"

int main(int argc, char** argv) { return lesioneval::cli::run(argc, argv); }
