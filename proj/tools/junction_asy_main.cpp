#include "junction/cli.hpp"

int main(int argc, char** argv) { return junction::run_cli(argc, argv); }
