#pragma once

#include <string>
#include <string_view>

namespace rumourkit {

/// Strict UTF-8 check: rejects overlongs, surrogates and code points above U+10FFFF.
bool is_valid_utf8(std::string_view text);

/// Simple (one-to-one) Unicode case folding of a UTF-8 string. Invalid
/// sequences are passed through byte-for-byte.
std::string fold_case(std::string_view utf8);

/// Code point fold used by fold_case.
char32_t fold_code_point(char32_t cp);

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace rumourkit
