#include "wnduma/cli.hpp"

int main(int argc, char** argv) { return wnduma::cli::run(argc, argv); }
