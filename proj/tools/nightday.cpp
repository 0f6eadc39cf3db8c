#include "nightday/pipeline/cli.hpp"

int main(int argc, char** argv) { return nightday::pipeline::cli_main(argc, argv); }
