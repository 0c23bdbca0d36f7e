#pragma once

#include <functional>
#include <string>

namespace gelab {

using WarningSink = std::function<void(const std::string&)>;

/// Routes a warning to the installed sink (stderr by default).
void warn(const std::string& message);

/// Installs a sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace gelab
