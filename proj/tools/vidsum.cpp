#include "vidsum/pipeline/cli.hpp"

int main(int argc, char** argv) { return vidsum::pipeline::run_cli(argc, argv); }
