#include "cli/commands.hpp"

int main(int argc, char** argv) { return progdec::cli::run(argc, argv); }
