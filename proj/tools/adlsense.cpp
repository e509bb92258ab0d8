#include "adlsense/cli.hpp"

int main(int argc, char** argv) { return adlsense::cli::run(argc, argv); }
