#include "roughlyap/cli.hpp"

int main(int argc, char** argv) { return roughlyap::cli::run(argc, argv); }
