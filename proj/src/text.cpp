#include "mixdown/text.hpp"

namespace mixdown::text {

namespace {

std::size_t sequence_length(unsigned char lead) noexcept {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

bool is_ascii_space(char32_t cp) noexcept {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f';
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) noexcept {
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto lead = static_cast<unsigned char>(bytes[i]);
    const std::size_t len = sequence_length(lead);
    if (len == 0 || i + len > bytes.size()) return false;
    char32_t cp = len == 1 ? lead : lead & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) {
      const auto c = static_cast<unsigned char>(bytes[i + k]);
      if ((c & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (c & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range scalars.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

std::vector<std::string_view> split_chars(std::string_view utf8) {
  std::vector<std::string_view> out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    std::size_t len = sequence_length(static_cast<unsigned char>(utf8[i]));
    if (len == 0 || i + len > utf8.size()) len = 1;
    out.push_back(utf8.substr(i, len));
    i += len;
  }
  return out;
}

std::size_t char_count(std::string_view utf8) noexcept {
  std::size_t n = 0;
  for (const char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

char32_t decode_char(std::string_view one_char) noexcept {
  if (one_char.empty()) return 0;
  const auto lead = static_cast<unsigned char>(one_char[0]);
  const std::size_t len = sequence_length(lead);
  if (len <= 1 || len > one_char.size()) return lead;
  char32_t cp = lead & (0xFF >> (len + 1));
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(one_char[k]) & 0x3F);
  return cp;
}

bool is_cjk(char32_t cp) noexcept {
  return (cp >= 0x3000 && cp <= 0x303F)      // CJK symbols and punctuation
         || (cp >= 0x3040 && cp <= 0x30FF)   // kana
         || (cp >= 0x3400 && cp <= 0x4DBF)   // extension A
         || (cp >= 0x4E00 && cp <= 0x9FFF)   // unified ideographs
         || (cp >= 0xAC00 && cp <= 0xD7AF)   // hangul syllables
         || (cp >= 0xF900 && cp <= 0xFAFF)   // compatibility ideographs
         || (cp >= 0xFF00 && cp <= 0xFFEF)   // fullwidth forms
         || (cp >= 0x20000 && cp <= 0x2FA1F);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

std::int64_t heuristic_token_count(std::string_view utf8) {
  std::int64_t total = 0;
  std::int64_t run = 0;
  auto flush = [&] {
    total += (run + 3) / 4;
    run = 0;
  };
  for (const auto ch : split_chars(utf8)) {
    const char32_t cp = decode_char(ch);
    if (is_ascii_space(cp)) {
      flush();
    } else if (is_cjk(cp)) {
      flush();
      ++total;
    } else {
      ++run;
    }
  }
  flush();
  if (total == 0 && !utf8.empty()) total = 1;
  return total;
}

}  // namespace mixdown::text
