#include "simp/cli.hpp"

int main(int argc, char** argv) { return simp::cli::run(argc, argv); }
