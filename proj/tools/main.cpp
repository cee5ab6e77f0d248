#include "mftrade/cli.hpp"

int main(int argc, char** argv) { return mftrade::cli::main_entry(argc, argv); }
