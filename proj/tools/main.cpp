#include "densekit/cli/commands.hpp"

int main(int argc, char** argv) { return densekit::cli::run_cli(argc, argv); }
