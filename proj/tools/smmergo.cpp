#include "smmergo/cli.hpp"

int main(int argc, char** argv) { return smmergo::run_cli(argc, argv); }
