#include "pratyaya/cli.hpp"

int main(int argc, char** argv) { return pratyaya::cli::run(argc, argv); }
