#include "commands.hpp"

int main(int argc, char **argv)
{
    return cpca::cli::run_main(argc, argv);
}
