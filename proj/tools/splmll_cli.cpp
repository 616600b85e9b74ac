#include "splmll/cli.hpp"

int main(int argc, char** argv) { return splmll::cli::run(argc, argv); }
