#include "rumourkit/text.hpp"

#include <cstdint>
#include <optional>

namespace rumourkit {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t length;
};

std::optional<Decoded> decode_one(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return Decoded{b0, 1};

  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return std::nullopt;
  }
  if (i + len > s.size()) return std::nullopt;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return std::nullopt;
  return Decoded{cp, len};
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

constexpr bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

// Blocks where upper/lower case alternate: the even member is upper case.
constexpr char32_t fold_even_upper(char32_t cp) { return (cp % 2 == 0) ? cp + 1 : cp; }
// Blocks where the odd member is upper case.
constexpr char32_t fold_odd_upper(char32_t cp) { return (cp % 2 == 1) ? cp + 1 : cp; }

}  // namespace

char32_t fold_code_point(char32_t cp) {
  if (cp < 0x80) return in(cp, 'A', 'Z') ? cp + 0x20 : cp;
  // Latin-1 Supplement
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (cp == 0xB5) return 0x3BC;  // micro sign
  // Latin Extended-A
  if (in(cp, 0x100, 0x12F) || in(cp, 0x132, 0x137) || in(cp, 0x14A, 0x177)) {
    return fold_even_upper(cp);
  }
  if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) return fold_odd_upper(cp);
  if (cp == 0x178) return 0xFF;
  if (cp == 0x17F) return 's';
  // Greek
  if (in(cp, 0x391, 0x3A9) && cp != 0x3A2) return cp + 0x20;
  if (cp == 0x386) return 0x3AC;
  if (in(cp, 0x388, 0x38A)) return cp + 0x25;
  if (cp == 0x38C) return 0x3CC;
  if (in(cp, 0x38E, 0x38F)) return cp + 0x3F;
  if (cp == 0x3C2) return 0x3C3;  // final sigma
  // Cyrillic
  if (in(cp, 0x400, 0x40F)) return cp + 0x50;
  if (in(cp, 0x410, 0x42F)) return cp + 0x20;
  if (in(cp, 0x460, 0x481) || in(cp, 0x48A, 0x4BF) || in(cp, 0x4D0, 0x52F)) {
    return fold_even_upper(cp);
  }
  if (cp == 0x4C0) return 0x4CF;
  if (in(cp, 0x4C1, 0x4CE)) return fold_odd_upper(cp);
  // Armenian
  if (in(cp, 0x531, 0x556)) return cp + 0x30;
  // Latin Extended Additional
  if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF)) return fold_even_upper(cp);
  if (cp == 0x1E9E) return 0xDF;
  // Letterlike symbols
  if (cp == 0x2126) return 0x3C9;
  if (cp == 0x212A) return 'k';
  if (cp == 0x212B) return 0xE5;
  // Fullwidth Latin
  if (in(cp, 0xFF21, 0xFF3A)) return cp + 0x20;
  return cp;
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto d = decode_one(text, i);
    if (!d) return false;
    i += d->length;
  }
  return true;
}

std::string fold_case(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto d = decode_one(utf8, i);
    if (!d) {
      out.push_back(utf8[i]);
      ++i;
      continue;
    }
    encode(fold_code_point(d->cp), out);
    i += d->length;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

}  // namespace rumourkit
