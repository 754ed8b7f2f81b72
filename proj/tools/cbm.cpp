#include "cbm/cli.hpp"

int main(int argc, char** argv) { return cbm::cli::run(argc, argv); }
