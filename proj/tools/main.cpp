#include "vdpsync/cli.hpp"

int main(int argc, char** argv) { return vdpsync::cli::run(argc, argv); }
