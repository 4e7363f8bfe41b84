#include "cli.hpp"

int main(int argc, char** argv) { return goex::cli::main(argc, argv); }
