#pragma once

#include <string>

#include "p4rec/num/params.hpp"

namespace p4rec::num {

// Flat binary parameter container.
//
// Layout (all integers little-endian):
//   magic   "P4T1" (4 bytes)
//   version u32
//   records until EOF:
//     name_len u32, name bytes (UTF-8)
//     rank     u32
//     dims     u64[rank]
//     data     f64[prod(dims)] little-endian
//
// Round-trips are bit-exact.
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace p4rec::num
