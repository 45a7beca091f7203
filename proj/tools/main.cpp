#include "ovdprobe/cli.hpp"

int main(int argc, char** argv) { return ovdprobe::cli::run(argc, argv); }
