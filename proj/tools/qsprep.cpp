#include "qsp/cli.hpp"

int main(int argc, char** argv) { return qsp::cli::cli_main(argc, argv); }
