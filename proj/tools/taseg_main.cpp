#include "taseg/cli.hpp"

int main(int argc, char** argv) { return taseg::cli::run(argc, argv); }
