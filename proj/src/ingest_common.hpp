#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string_view>

#include "fluxgate/errors.hpp"
#include "fluxgate/line_source.hpp"

namespace fluxgate::detail {

using LineFeed = std::function<void(const LineVisitor&)>;

/// Line numbering and the skip-or-abort policy for malformed lines. Blank
/// lines are ignored.
class LineIngest {
 public:
  static constexpr std::size_t kReportedLines = 16;

  LineIngest(const IngestOptions& options, IngestStats* stats) : options_(options), stats_(stats) {}

  template <typename Parse>
  void handle(std::string_view line, Parse&& parse) {
    ++line_number_;
    if (std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; })) return;
    if (parse(line)) return;
    if (options_.strict) throw Error(ErrorCode::MalformedLine, "", line_number_);
    ++malformed_;
    if (malformed_lines_.size() < kReportedLines) malformed_lines_.push_back(line_number_);
  }

  std::size_t line_number() const noexcept { return line_number_; }

  void finish(std::size_t records) {
    if (!stats_) return;
    stats_->lines = line_number_;
    stats_->records = records;
    stats_->malformed = malformed_;
    stats_->malformed_lines = malformed_lines_;
  }

 private:
  IngestOptions options_;
  IngestStats* stats_;
  std::size_t line_number_ = 0;
  std::size_t malformed_ = 0;
  std::vector<std::size_t> malformed_lines_;
};

}  // namespace fluxgate::detail
