#include "cephforge/cli.hpp"

int main(int argc, char** argv) { return cephforge::cli::run(argc, argv); }
