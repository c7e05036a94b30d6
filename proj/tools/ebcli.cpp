#include "eb/cli.hpp"

int main(int argc, char** argv) { return eb::run_cli(argc, argv); }
