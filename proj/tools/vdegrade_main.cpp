#include "vdegrade/cli.hpp"

int main(int argc, char** argv) { return vdegrade::run_cli(argc, argv); }
