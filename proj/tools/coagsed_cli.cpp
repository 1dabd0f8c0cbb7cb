#include "coagsed/driver.hpp"

int main(int argc, char** argv) { return coagsed::cli_main(argc, argv); }
