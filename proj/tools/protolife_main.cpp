#include "protolife/cli_app.hpp"

int main(int argc, char** argv) { return protolife::cli_main(argc, argv); }
