#include "chsav/cli.hpp"

int main(int argc, char** argv) { return chsav::cli(argc, argv); }
