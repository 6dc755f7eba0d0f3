#include "microsynth/hashing.hpp"

#include <fstream>
#include <sstream>

#include "microsynth/errors.hpp"

namespace microsynth {

std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return to_hex(fnv1a64(buf.str()));
}

}  // namespace microsynth
