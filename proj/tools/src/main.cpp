#include "cognate/cli.hpp"

int main(int argc, char** argv) { return cognate::cli::run(argc, argv); }
