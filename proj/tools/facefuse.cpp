#include "facefuse/cli/cli.hpp"

int main(int argc, char** argv) { return facefuse::cli_dispatch(argc, argv); }
