#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixdown/model.hpp"

namespace testing {

namespace fs = std::filesystem;

inline const fs::path kSourceDir = MIXDOWN_SOURCE_DIR;
inline const fs::path kGoldenDir = kSourceDir / "tests" / "fixtures" / "golden";

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("mixdown_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

inline mixdown::Record make_record(std::uint64_t id, std::string source, std::string instruction,
                                   std::string input, std::string output) {
  mixdown::Record r;
  r.sample.id = id;
  r.sample.source = std::move(source);
  r.sample.instruction = std::move(instruction);
  r.sample.input = std::move(input);
  r.sample.output = std::move(output);
  r.scores = mixdown::basic_scores(r.sample);
  return r;
}

// Record with every score planted, for selection tests.
inline mixdown::Record scored_record(std::uint64_t id, std::string source, double ifd, double ppl,
                                     std::int64_t tokens) {
  auto r = make_record(id, std::move(source), "instruction " + std::to_string(id), "", "answer");
  r.scores.ifd_base = ifd;
  r.scores.ppl = ppl;
  r.scores.token_count = tokens;
  return r;
}

}  // namespace testing
