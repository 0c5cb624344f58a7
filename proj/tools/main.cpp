#include "cli/commands.hpp"

int main(int argc, char** argv) { return xmkt::cli::run(argc, argv); }
