#ifndef CYLQG_CLI_HPP
#define CYLQG_CLI_HPP

namespace cylqg {

// Exit codes: 0 success, 1 validation failure, 2 solver failure,
// 64 usage error, 65 malformed config.
int cli_main(int argc, char** argv);

} // namespace cylqg

#endif
