#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <string_view>
#include <vector>

namespace fluxgate {

/// Policy for line-oriented ingest of snapshot and range files.
struct IngestOptions {
  bool strict = false;  // abort on the first malformed line instead of skipping it
};

struct IngestStats {
  std::size_t lines = 0;
  std::size_t records = 0;  // entries loaded (hosts or ranges)
  std::size_t malformed = 0;
  std::vector<std::size_t> malformed_lines;  // first few offenders, 1-based
};

using LineVisitor = std::function<void(std::string_view line)>;

/// Streams the lines of a text file, decompressing transparently when the
/// path ends in ".gz". Trailing '\r' is stripped. Throws Error(Io) when the
/// file cannot be opened or read.
void for_each_line(const std::filesystem::path& path, const LineVisitor& visit);

void for_each_line(std::istream& in, const LineVisitor& visit);

}  // namespace fluxgate
