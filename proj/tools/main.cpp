#include "objval/cli.hpp"

int main(int argc, char** argv) { return objval::run_cli(argc, argv); }
