#include "sgt/cli.hpp"

int main(int argc, char** argv) { return sgt::run_cli(argc, argv); }
