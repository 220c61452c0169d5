#include "connecto/cli.hpp"

int main(int argc, char** argv) { return connecto::cli::run(argc, argv); }
