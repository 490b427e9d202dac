#pragma once

#include <iosfwd>

namespace mfv {

// Exit codes: 0 success, 1 usage/config/runtime failure, 2 negative result
// (not tangent, condition not found, viability violated, failed check).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitNegative = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mfv
