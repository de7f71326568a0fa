#include "qvar_cli.hpp"

int main(int argc, char** argv) { return qvar::cli::run(argc, argv); }
