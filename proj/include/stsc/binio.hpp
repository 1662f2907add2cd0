#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>

#include "stsc/error.hpp"

namespace stsc::binio {

template <typename U>
void put_le(std::ostream& os, U v) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& is, const char* what) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    fail(ErrorCode::io_error, std::string("truncated ") + what);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace stsc::binio
