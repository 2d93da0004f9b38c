#include "cli.hpp"

int main(int argc, char** argv) { return crasim::cli::main_entry(argc, argv); }
