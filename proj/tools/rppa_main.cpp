#include "rppa/cli.hpp"

int main(int argc, char** argv) { return rppa::cli::dispatch(argc, argv); }
