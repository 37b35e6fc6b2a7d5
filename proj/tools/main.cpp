#include "gtforge/cli/app.hpp"

int main(int argc, char** argv) { return gtforge::cli::dispatch(argc, argv); }
