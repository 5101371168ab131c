// SPDX-License-Identifier: Apache-2.0

#include <cdu_jcas/harness/cli.hpp>

#include <string>
#include <vector>

int main(int argc, char **argv)
{
    return cdu::cli_main(std::vector<std::string>(argv, argv + argc));
}
