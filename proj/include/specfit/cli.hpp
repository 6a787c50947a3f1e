#ifndef SPECFIT_CLI_HPP_
#define SPECFIT_CLI_HPP_

#include <string>
#include <vector>

namespace specfit {

// Full command-line entry point. argv-style arguments without the program
// name. Returns the process exit code: 0 success, 1 configuration error,
// 2 partial per-spectrum failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace specfit

#endif  // SPECFIT_CLI_HPP_
