#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nvcav::cli
{

enum ExitCode : int
{
    exit_ok = 0,
    exit_failure = 1, // tolerance breach or non-convergence
    exit_usage = 2,
    exit_io = 3
};

// Default output directory when --out is absent.
inline constexpr const char *output_env = "NVCAV_OUT";

// args excludes the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace nvcav::cli
