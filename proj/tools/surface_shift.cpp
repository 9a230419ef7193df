#include "surfshift/cli.hpp"

int main(int argc, char** argv) { return surfshift::run_cli(argc, argv); }
