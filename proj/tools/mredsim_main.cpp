#include "mred/io_cli.hpp"

int main(int argc, char** argv) { return mred::cli_main(argc, argv); }
