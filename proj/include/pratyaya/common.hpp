#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace pratyaya {

// Control characters shared by the corpus encoding and the model.
// '+' joins stem and suffix name, '&' starts a decoder sequence,
// '$' ends it, '*' pads to fixed length.
inline constexpr char join_char = '+';
inline constexpr char start_char = '&';
inline constexpr char end_char = '$';
inline constexpr char pad_char = '*';
inline constexpr std::array<char, 4> control_chars{join_char, start_char, end_char, pad_char};

inline bool is_control_char(char c) {
  return c == join_char || c == start_char || c == end_char || c == pad_char;
}

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a file or CLI argument is unusable before any work starts.
// The CLI maps it to exit code 2, everything else to 1.
class config_error : public error {
 public:
  using error::error;
};

}  // namespace pratyaya
