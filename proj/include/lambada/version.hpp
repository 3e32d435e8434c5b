#pragma once

namespace lambada {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lambada
