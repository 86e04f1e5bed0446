#pragma once

namespace twosys {
inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr int kConfigVersion = 1;
}  // namespace twosys
