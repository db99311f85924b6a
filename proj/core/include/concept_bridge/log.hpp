#pragma once

#include <functional>
#include <string_view>

namespace concept_bridge {

using WarningHandler = std::function<void(std::string_view)>;

/// Emits a warning. Defaults to a "warning: ..." line on stderr.
void warn(std::string_view message);

/// Replaces the warning sink; returns the previous one. Passing an empty
/// handler silences warnings.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace concept_bridge
