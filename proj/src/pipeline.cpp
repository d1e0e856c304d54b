#include "fluxgate/pipeline.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

using Clock = std::chrono::steady_clock;

double now_ms() {
  return std::chrono::duration<double, std::milli>(Clock::now().time_since_epoch()).count();
}

}  // namespace

std::string_view to_string(VerdictLabel label) noexcept {
  switch (label) {
    case VerdictLabel::FastFlux: return "fastflux";
    case VerdictLabel::Legitimate: return "legit";
    case VerdictLabel::NotSuspicious: return "not_suspicious";
  }
  return "unknown";
}

Detector::Detector(const ScanStore& scan, const GeoStore& geo, const ModelBundle& bundle,
                   std::size_t threshold)
    : scan_(scan), geo_(geo), bundle_(bundle), threshold_(threshold) {}

Verdict Detector::classify(const DnsObservation& obs) const { return decide(obs, now_ms()); }

Verdict Detector::classify_record(std::string_view json_line) const {
  const double started = now_ms();
  return decide(parse_json_record(json_line), started);
}

Verdict Detector::decide(const DnsObservation& obs, double started_ms) const {
  Verdict verdict;
  verdict.domain = obs.domain;
  if (!is_suspicious(obs, threshold_)) return verdict;

  verdict.features = extract(obs, scan_, geo_);
  const FeatureArray x = bundle_.scaler ? bundle_.scaler->apply(verdict.features) : verdict.features.values;
  verdict.decision_value = decision_value(bundle_.model, x);
  verdict.label = classify_decision(verdict.decision_value) < 0 ? VerdictLabel::FastFlux : VerdictLabel::Legitimate;
  verdict.latency_ms = std::max(now_ms() - started_ms, 1e-6);
  return verdict;
}

std::string verdict_json(const Verdict& verdict, const VerdictFormat& format) {
  nlohmann::ordered_json j;
  j["domain"] = verdict.domain;
  j["label"] = to_string(verdict.label);
  if (verdict.label == VerdictLabel::NotSuspicious) {
    j["decision_value"] = nullptr;
  } else {
    j["decision_value"] = verdict.decision_value;
    if (format.include_latency) j["latency_ms"] = verdict.latency_ms;
    if (format.include_features) {
      nlohmann::ordered_json features;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        features[std::string(feature_name(static_cast<Feature>(f)))] = verdict.features.values[f];
      }
      j["features"] = std::move(features);
    }
  }
  return j.dump();
}

std::string error_verdict_json(std::size_t line_number, std::string_view message) {
  nlohmann::ordered_json j;
  j["line"] = line_number;
  j["error"] = message;
  return j.dump();
}

namespace {

struct Outcome {
  std::string text;
  bool failed = false;
  std::exception_ptr error;
};

/// Shared state between the reader (caller thread), workers and the writer.
class StreamState {
 public:
  explicit StreamState(std::size_t max_in_flight) : max_in_flight_(std::max<std::size_t>(max_in_flight, 1)) {}

  /// Blocks while the window is full. Returns false once the stream aborts.
  bool submit(std::size_t seq, std::string line) {
    std::unique_lock lock(mutex_);
    space_.wait(lock, [&] { return in_flight_ < max_in_flight_ || aborted_; });
    if (aborted_) return false;
    ++in_flight_;
    jobs_.emplace_back(seq, std::move(line));
    work_.notify_one();
    return true;
  }

  void close(std::size_t total) {
    std::lock_guard lock(mutex_);
    total_ = total;
    closed_ = true;
    work_.notify_all();
    done_.notify_all();
  }

  std::optional<std::pair<std::size_t, std::string>> take() {
    std::unique_lock lock(mutex_);
    work_.wait(lock, [&] { return !jobs_.empty() || closed_ || aborted_; });
    if (jobs_.empty() || aborted_) return std::nullopt;
    auto job = std::move(jobs_.front());
    jobs_.pop_front();
    return job;
  }

  void finish(std::size_t seq, Outcome outcome) {
    std::lock_guard lock(mutex_);
    results_.emplace(seq, std::move(outcome));
    done_.notify_all();
  }

  /// Next result in input order; nullopt when the stream is exhausted.
  std::optional<Outcome> next(std::size_t seq) {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return results_.contains(seq) || (closed_ && seq >= total_) || aborted_; });
    const auto it = results_.find(seq);
    if (it == results_.end()) return std::nullopt;
    Outcome out = std::move(it->second);
    results_.erase(it);
    return out;
  }

  void release() {
    std::lock_guard lock(mutex_);
    --in_flight_;
    space_.notify_one();
  }

  void abort() {
    std::lock_guard lock(mutex_);
    aborted_ = true;
    work_.notify_all();
    space_.notify_all();
    done_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable work_, space_, done_;
  std::deque<std::pair<std::size_t, std::string>> jobs_;
  std::map<std::size_t, Outcome> results_;
  std::size_t max_in_flight_;
  std::size_t in_flight_ = 0;
  std::size_t total_ = 0;
  bool closed_ = false;
  bool aborted_ = false;
};

Outcome process(const Detector& detector, std::size_t line_number, const std::string& line,
                const VerdictFormat& format) {
  Outcome out;
  try {
    out.text = verdict_json(detector.classify_record(line), format);
  } catch (const Error& e) {
    out.failed = true;
    out.text = error_verdict_json(line_number, e.what());
    out.error = std::make_exception_ptr(Error(e.code(), e.what(), line_number));
  } catch (const std::exception& e) {
    out.failed = true;
    out.text = error_verdict_json(line_number, e.what());
    out.error = std::make_exception_ptr(Error(ErrorCode::MalformedRecord, e.what(), line_number));
  }
  return out;
}

}  // namespace

StreamStats serve(const Detector& detector, const LineReader& read, const LineWriter& write,
                  const StreamOptions& options) {
  StreamState state(options.max_in_flight);
  StreamStats stats;
  std::exception_ptr failure;

  std::vector<std::jthread> workers;
  const std::size_t threads = std::max<std::size_t>(options.threads, 1);
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      while (auto job = state.take()) {
        state.finish(job->first, process(detector, job->first + 1, job->second, options.format));
      }
    });
  }

  std::jthread writer([&] {
    try {
      for (std::size_t seq = 0;; ++seq) {
        auto outcome = state.next(seq);
        if (!outcome) break;
        ++stats.records;
        if (outcome->failed) {
          ++stats.errors;
          if (options.strict) {
            failure = outcome->error;
            state.abort();
            break;
          }
        }
        write(outcome->text);
        state.release();
      }
    } catch (...) {
      failure = std::current_exception();
      state.abort();
    }
  });

  std::size_t seq = 0;
  try {
    while (auto line = read()) {
      if (!state.submit(seq, std::move(*line))) break;
      ++seq;
    }
  } catch (...) {
    state.abort();
    writer.join();
    throw;
  }
  state.close(seq);
  writer.join();
  state.abort();  // releases idle workers after a strict stop
  workers.clear();
  if (failure) std::rethrow_exception(failure);
  return stats;
}

StreamStats serve(const Detector& detector, std::istream& in, std::ostream& out,
                  const StreamOptions& options) {
  const LineReader read = [&]() -> std::optional<std::string> {
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  const LineWriter write = [&](std::string_view text) {
    out << text << '\n';
    out.flush();
  };
  return serve(detector, read, write, options);
}

namespace {

class FdGuard {
 public:
  explicit FdGuard(int fd) : fd_(fd) {}
  FdGuard(const FdGuard&) = delete;
  FdGuard& operator=(const FdGuard&) = delete;
  ~FdGuard() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

constexpr int kPollMs = 100;

void serve_connection(const Detector& detector, int fd, const StreamOptions& options,
                      const std::atomic<bool>& stop) {
  FdGuard guard(fd);
  std::string buffer;
  bool eof = false;
  const LineReader read = [&]() -> std::optional<std::string> {
    for (;;) {
      if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof) {
        if (buffer.empty()) return std::nullopt;
        return std::exchange(buffer, {});
      }
      if (stop.load()) return std::nullopt;
      pollfd p{fd, POLLIN, 0};
      const int ready = ::poll(&p, 1, kPollMs);
      if (ready < 0 && errno != EINTR) return std::nullopt;
      if (ready <= 0) continue;
      char chunk[4096];
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) {
        eof = true;
        continue;
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  };
  const LineWriter write = [&](std::string_view text) {
    std::string line(text);
    line += '\n';
    std::size_t sent = 0;
    while (sent < line.size()) {
      const ssize_t n = ::send(fd, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorCode::Io, "socket write failed");
      sent += static_cast<std::size_t>(n);
    }
  };
  try {
    serve(detector, read, write, options);
  } catch (const Error&) {
    // A broken or strict-aborted connection ends only that connection.
  }
}

}  // namespace

void serve_socket(const Detector& detector, const std::filesystem::path& socket_path,
                  const StreamOptions& options, const std::atomic<bool>& stop) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string path = socket_path.string();
  if (path.size() >= sizeof addr.sun_path) throw Error(ErrorCode::InvalidArgument, "socket path too long");
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);

  FdGuard listener(::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (listener.get() < 0) throw Error(ErrorCode::Io, "socket() failed");
  ::unlink(path.c_str());
  if (::bind(listener.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error(ErrorCode::Io, "cannot bind " + path + ": " + std::strerror(errno));
  }
  if (::listen(listener.get(), 16) != 0) throw Error(ErrorCode::Io, "listen() failed");

  std::vector<std::jthread> connections;
  while (!stop.load()) {
    pollfd p{listener.get(), POLLIN, 0};
    const int ready = ::poll(&p, 1, kPollMs);
    if (ready <= 0) continue;
    const int fd = ::accept4(listener.get(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    connections.emplace_back(serve_connection, std::cref(detector), fd, std::cref(options), std::cref(stop));
  }
  connections.clear();
  ::unlink(path.c_str());
}

std::size_t threads_from_env(std::size_t fallback) {
  const char* value = std::getenv("FLUXGATE_THREADS");
  if (value == nullptr) return fallback;
  const std::string_view text(value);
  std::size_t threads = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), threads);
  if (ec != std::errc{} || ptr != text.data() + text.size() || threads < 1) return fallback;
  return std::min<std::size_t>(threads, 256);
}

}  // namespace fluxgate
