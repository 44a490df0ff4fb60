#include "wnls/lab.hpp"

int main(int argc, char** argv) { return wnls::cli_main(argc, argv); }
