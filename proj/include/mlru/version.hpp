#pragma once

namespace mlru {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mlru
