#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace confplane::cli {

/// Entry point shared by the binary and the tests; `args` excludes the
/// program name. Exit status: 0 when a verdict was produced (Inconclusive
/// included), 1 on a usage error (subcommand help printed to `err`), 2 on a
/// numeric failure (error JSON on `out`, message on `err`). Configuration
/// precedence is flags > CONFPLANE_* environment variables > defaults, with
/// every effective value and its source echoed into the report.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

} // namespace confplane::cli
