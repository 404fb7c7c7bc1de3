#include "mixdown/hash.hpp"

#include <openssl/evp.h>

#include "mixdown/error.hpp"

namespace mixdown {

Md5Digest md5(std::string_view bytes) {
  Md5Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_md5(), nullptr) != 1 || len != out.size()) {
    throw Error(ErrorKind::data, "md5_failure", "EVP_Digest(md5) failed");
  }
  return out;
}

std::string to_hex(const Md5Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (const auto b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

}  // namespace mixdown
