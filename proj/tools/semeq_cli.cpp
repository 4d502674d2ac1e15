#include "semeq/harness.hpp"

int main(int argc, char** argv) { return semeq::cli_main(argc, argv); }
