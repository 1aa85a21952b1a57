#pragma once

namespace tribaker {

inline constexpr const char* kToolVersion = "1.0.0";

} // namespace tribaker
