// Streams a large generated source and checks that peak resident memory grows
// by far less than the file size.
#include <sys/resource.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mixdown/ingest.hpp"

namespace {

long peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <scratch-file>\n", argv[0]);
    return 2;
  }
  const std::filesystem::path path = argv[1];
  constexpr int kLines = 400000;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    const std::string pad(160, 'x');
    for (int i = 0; i < kLines; ++i) {
      out << "{\"instruction\":\"item " << i << ' ' << pad << "\",\"input\":\"\",\"output\":\"" << pad << "\"}\n";
    }
  }
  const auto file_mb = static_cast<double>(std::filesystem::file_size(path)) / (1024.0 * 1024.0);

  const long before = peak_rss_kb();
  mixdown::SourceRegistry reg;
  reg.add("big", path);
  std::uint64_t count = 0, bytes = 0;
  const auto report = mixdown::read_sources(reg, [&](mixdown::Sample&& s) {
    ++count;
    bytes += s.instruction.size() + s.output.size();
  });
  const double grew_mb = static_cast<double>(peak_rss_kb() - before) / 1024.0;
  std::filesystem::remove(path);

  const bool ok = count == kLines && report.output_count == kLines && grew_mb < 8.0;
  std::printf("%s streamed %llu records (%.1f MiB file, %llu payload bytes); peak RSS grew %.2f MiB (limit 8)\n",
              ok ? "PASS" : "FAIL", static_cast<unsigned long long>(count), file_mb,
              static_cast<unsigned long long>(bytes), grew_mb);
  return ok ? 0 : 1;
}
