#include "l2o/cli.hpp"

int main(int argc, char** argv) { return l2o::cli::run_cli(argc, argv); }
