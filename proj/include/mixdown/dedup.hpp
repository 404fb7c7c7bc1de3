#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "mixdown/hash.hpp"
#include "mixdown/model.hpp"

namespace mixdown {

using TextHasher = std::function<Md5Digest(std::string_view)>;

// Exact-match deduplication keyed by MD5(rendered_text). Among byte-identical
// texts the smallest id survives. A digest match is only an index hit: the
// full texts are compared before anything is dropped. Output is in id order;
// drops are reported as "duplicate".
StageResult dedup_exact(std::vector<Record> records);

// Same contract with a caller-supplied digest (hashed serially). Lets tests
// force collisions.
StageResult dedup_exact(std::vector<Record> records, const TextHasher& hasher);

}  // namespace mixdown
