#include "driver.hpp"

int main(int argc, char** argv) { return rmfem::cli::main(argc, argv); }
