#include "uavsec/cli.hpp"

int main(int argc, char** argv) { return uavsec::cli::cli_main(argc, argv); }
