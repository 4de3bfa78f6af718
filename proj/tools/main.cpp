#include "sig/cli_io.hpp"

int main(int argc, char** argv) { return sig::cli_main(argc, argv); }
