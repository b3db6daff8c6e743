#pragma once

namespace crn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;  // configuration or runtime failure
inline constexpr int kExitUsage = 2;  // unknown subcommand or bad flags

/// Parses argv and runs one pipeline stage.
int dispatch(int argc, const char* const* argv);

}  // namespace crn::cli
