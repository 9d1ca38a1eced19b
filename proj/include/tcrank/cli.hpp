#ifndef TCRANK_CLI_HPP
#define TCRANK_CLI_HPP

/**
 * @file cli.hpp
 * @brief Entry point of the `tcrank` command-line tool.
 */

namespace tcrank {

/**
 * Parse `argv` and run one subcommand (rank, estimate, simulate, compare or sweep).
 *
 * @return 0 on success, 2 for configuration errors, 3 for data errors, 4 for numerical failures.
 */
int run_cli(int argc, char** argv);

}

#endif
