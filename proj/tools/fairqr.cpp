#include "fairqr/cli.hpp"

int main(int argc, char** argv) { return fairqr::cli::main(argc, argv); }
