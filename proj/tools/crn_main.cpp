#include "crn/cli.hpp"

int main(int argc, char** argv) {
    return crn::cli::dispatch(argc, argv);
}
