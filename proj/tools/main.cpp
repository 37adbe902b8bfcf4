#include "featmap/cli.hpp"

int main(int argc, char **argv) { return featmap::run_cli(argc, argv); }
