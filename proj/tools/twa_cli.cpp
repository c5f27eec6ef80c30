#include "twa/cli.hpp"

int main(int argc, char** argv) { return twa::cli::run(argc, argv); }
