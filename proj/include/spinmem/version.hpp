#pragma once

namespace spinmem {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace spinmem
