#pragma once

namespace concept_bridge {
inline constexpr const char* kVersion = "0.1.0";
}
