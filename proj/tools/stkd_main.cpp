#include "stkd/cli.hpp"

int main(int argc, char** argv) { return stkd::run_cli(argc, argv); }
