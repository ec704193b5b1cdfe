#include "graphdiff/cli.hpp"

int main(int argc, char** argv) { return graphdiff::cli::parse_and_dispatch(argc, argv); }
