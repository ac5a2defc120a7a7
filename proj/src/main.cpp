#include "forch/cli.hpp"

int main(int argc, char** argv) { return forch::run_cli(argc, argv); }
