#include "edgelat/cli.hpp"

int main(int argc, char** argv) { return edgelat::cli::main(argc, argv); }
