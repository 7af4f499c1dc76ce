#pragma once

namespace randlat {

inline const char* version() { return "0.1.0"; }

}  // namespace randlat
