#include "eltmcm/cli.hpp"

int main(int argc, char** argv) { return eltmcm::cli_main(argc, argv); }
