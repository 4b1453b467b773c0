#pragma once

#include <algorithm>
#include <string>

#include "privlog/error.hpp"

namespace privlog {

template <std::size_t N>
Secret<N> Secret<N>::from(ByteView raw) {
  if (raw.size() != N) {
    throw Error(ErrorCode::InvalidLength,
                "secret must be " + std::to_string(N) + " bytes, got " +
                    std::to_string(raw.size()));
  }
  Secret s;
  std::copy(raw.begin(), raw.end(), s.bytes_.begin());
  return s;
}

}  // namespace privlog
