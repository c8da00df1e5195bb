#include <string>
#include <vector>

#include "vmstool/commands.hpp"

int main(int argc, char** argv) { return vmstool::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
