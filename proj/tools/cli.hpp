#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbfgs/qn_update.hpp"

namespace rbfgs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

using UpdateFn = std::function<InverseEstimate(const InverseEstimate&, const SketchSample&, const Matrix&)>;

struct CheckGroup {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Fast invariant suite behind `rbfgs validate`. The update is injectable so
// a corrupted one can be shown to fail.
std::vector<CheckGroup> validate_suite(const UpdateFn& update = bfgs_update, std::uint64_t seed = 0);

}  // namespace rbfgs::cli
