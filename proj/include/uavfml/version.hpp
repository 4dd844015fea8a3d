#pragma once

namespace uavfml {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace uavfml
