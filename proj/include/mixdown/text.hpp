#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. Everything that counts "characters" in mixdown counts
// Unicode scalar values, never bytes.
namespace mixdown::text {

bool is_valid_utf8(std::string_view bytes) noexcept;

// Splits valid UTF-8 into one view per scalar value. Invalid input yields
// unspecified (but memory-safe) splits; validate first.
std::vector<std::string_view> split_chars(std::string_view utf8);

std::size_t char_count(std::string_view utf8) noexcept;

char32_t decode_char(std::string_view one_char) noexcept;

bool is_cjk(char32_t cp) noexcept;

// ASCII-only case fold; non-ASCII bytes pass through untouched.
std::string ascii_lower(std::string_view s);

// Fallback token estimate: each CJK character is one token, each maximal
// run of other non-whitespace characters costs ceil(len / 4). Never returns
// 0 for non-empty text.
std::int64_t heuristic_token_count(std::string_view utf8);

}  // namespace mixdown::text
