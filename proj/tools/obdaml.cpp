#include "obdaml/cli.hpp"

int main(int argc, char** argv) { return obdaml::cli_dispatch(argc, argv); }
