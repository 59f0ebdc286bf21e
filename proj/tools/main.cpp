#include "cli.hpp"

int main(int argc, char** argv) { return sdglmc::cli::run(argc, argv); }
