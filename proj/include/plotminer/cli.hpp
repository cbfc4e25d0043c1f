#pragma once

#include <ostream>

namespace plotminer::cli {

// Exit status: 0 success, 1 some input failed, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plotminer::cli
