#include "raes/harness.hpp"

int main(int argc, char** argv) { return raes::cli_main(argc, argv); }
