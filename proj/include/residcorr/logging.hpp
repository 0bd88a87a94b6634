#pragma once

#include <functional>
#include <string>

namespace residcorr {

using WarningHandler = std::function<void(const std::string&)>;

/// Replaces the warning sink (default: one line on stderr). Returns the old one.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace residcorr
