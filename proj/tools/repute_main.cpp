#include "repute/cli.hpp"

int main(int argc, char** argv) { return repute::cli::run(argc, argv); }
