#pragma once

namespace seqstop {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace seqstop
