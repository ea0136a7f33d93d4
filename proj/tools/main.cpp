#include "largegt/cli.hpp"

int main(int argc, char** argv) { return largegt::cli_dispatch(argc, argv); }
