#include "mfginv/cli/app.hpp"

int main(int argc, char** argv) { return mfginv::cli::main_cli(argc, argv); }
