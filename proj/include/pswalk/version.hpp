#pragma once

namespace pswalk {

inline constexpr const char* kToolName = "pswalk";
inline constexpr const char* kToolVersion = "0.4.0";

}  // namespace pswalk
