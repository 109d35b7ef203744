#include "cli.hpp"

int main(int argc, char** argv) { return nonlocal::cli::main(argc, argv); }
