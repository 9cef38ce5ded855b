#include "ifr/cli.hpp"

int main(int argc, char** argv) { return ifr::ifr_cli_main(argc, argv); }
