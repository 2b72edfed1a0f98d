#include "abd/cli.hpp"

int main(int argc, char** argv) { return abd::run_cli(argc, argv); }
