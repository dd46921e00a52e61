#include "stac/cli.hpp"

int main(int argc, char** argv) { return stac::cli_main(argc, argv); }
