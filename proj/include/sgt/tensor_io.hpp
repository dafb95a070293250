#pragma once

#include <iosfwd>
#include <string>

#include "sgt/tensor.hpp"

namespace sgt {

// "SGT1" binary tensor format, used by dataset and checkpoint files:
//   magic 0x53 0x47 0x54 0x31 ("SGT1")
//   u8 rank
//   rank x u64 little-endian extents
//   product(extents) x f64 little-endian IEEE-754 values
void write_sgt1(std::ostream& os, const Tensor& t);
Tensor read_sgt1(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace sgt
