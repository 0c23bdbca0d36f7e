#pragma once

#include <string>

namespace gelab {

/// "<semver>+<git rev>.<build timestamp>"; fixed at configure time.
std::string version_stamp();

}  // namespace gelab
