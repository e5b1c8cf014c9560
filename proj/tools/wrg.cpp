#include <wrg/cli.hpp>

int main(int argc, char** argv) { return wrg::cli::run(argc, argv); }
