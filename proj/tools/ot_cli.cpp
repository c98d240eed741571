#include "ot/io.hpp"

int main(int argc, char** argv) { return ot::run_cli(argc, argv); }
