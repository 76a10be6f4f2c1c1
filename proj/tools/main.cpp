#include "cylqg/cli.hpp"

int main(int argc, char** argv) { return cylqg::cli_main(argc, argv); }
