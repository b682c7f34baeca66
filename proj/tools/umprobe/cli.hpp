#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace umprobe::cli {

/// Process exit codes.
enum Exit : int {
  ok = 0,
  partial_failure = 1,
  invalid_args = 2,
  input_error = 3,
  numerical_error = 4,
};

/// Environment variable holding the default worker count for `probe`.
inline constexpr const char *kJobsEnv = "UMPROBE_JOBS";

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

} // namespace umprobe::cli
