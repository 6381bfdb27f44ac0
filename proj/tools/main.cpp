#include "droplet/cli.hpp"

int main(int argc, char** argv) { return droplet::cli::run(argc, argv); }
