#include "lvl/cli.hpp"

int main(int argc, char** argv) { return lvl::cli::run(argc, argv); }
