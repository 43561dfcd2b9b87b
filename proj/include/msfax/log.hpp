#pragma once

#include <functional>
#include <string>

namespace msfax {

// Process-wide sink for non-fatal diagnostics. The default writes to stderr.
using WarningHandler = std::function<void(const std::string&)>;

void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace msfax
