#include "semiflow/cli.hpp"

int main(int argc, char** argv)
{
    return semiflow::run_cli(argc, argv);
}
