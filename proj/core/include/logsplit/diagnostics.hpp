#pragma once

#include <functional>
#include <string>

namespace logsplit {

using WarningSink = std::function<void(const std::string&)>;

/// Replaces the process-wide warning sink (default: std::clog). Passing an
/// empty function silences warnings. Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& message);

}  // namespace logsplit
