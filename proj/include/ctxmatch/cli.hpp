#pragma once

#include <istream>
#include <ostream>

namespace ctxmatch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Subcommands: build-vocab, train, eval, gradcheck, build-index, rerank,
/// serve. Results go to `out`, diagnostics and usage text to `err`.
int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace ctxmatch
