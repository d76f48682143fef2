#include "cli.hpp"

int main(int argc, char** argv) { return secl::cli_main(argc, argv); }
