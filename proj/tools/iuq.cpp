#include "iuq/cli.hpp"

int main(int argc, char** argv) { return iuq::cli_main(argc, argv); }
