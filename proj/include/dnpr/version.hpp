#pragma once

namespace dnpr {

inline constexpr const char* kVersion = "0.1.0";

} // namespace dnpr
