#include "fluxgate/line_source.hpp"

#include <zlib.h>

#include <array>
#include <fstream>
#include <memory>
#include <string>

#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

void emit(std::string& line, const LineVisitor& visit) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  visit(line);
  line.clear();
}

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};

void for_each_gz_line(const std::filesystem::path& path, const LineVisitor& visit) {
  std::unique_ptr<gzFile_s, GzCloser> file{gzopen(path.c_str(), "rb")};
  if (!file) throw Error(ErrorCode::Io, "cannot open " + path.string());
  gzbuffer(file.get(), 1 << 17);

  std::array<char, 1 << 16> chunk{};
  std::string line;
  for (;;) {
    const int n = gzread(file.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int errnum = 0;
      const char* msg = gzerror(file.get(), &errnum);
      throw Error(ErrorCode::Io, path.string() + ": " + (msg ? msg : "gzip read failed"));
    }
    if (n == 0) break;
    std::string_view data{chunk.data(), static_cast<std::size_t>(n)};
    while (!data.empty()) {
      const auto nl = data.find('\n');
      if (nl == std::string_view::npos) {
        line.append(data);
        break;
      }
      line.append(data.substr(0, nl));
      emit(line, visit);
      data.remove_prefix(nl + 1);
    }
  }
  if (!line.empty()) emit(line, visit);
}

}  // namespace

void for_each_line(std::istream& in, const LineVisitor& visit) {
  std::string line;
  while (std::getline(in, line)) emit(line, visit);
  if (in.bad()) throw Error(ErrorCode::Io, "stream read failed");
}

void for_each_line(const std::filesystem::path& path, const LineVisitor& visit) {
  if (path.extension() == ".gz") {
    for_each_gz_line(path, visit);
    return;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  for_each_line(in, visit);
}

}  // namespace fluxgate
