#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace povmap {

// Bad inputs: unreadable files, schema violations, unknown labels, invalid
// parameters. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures that arise from the data rather than the request: undefined
// correlations, solver non-convergence, empty training folds. Exit code 1.
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVarianceError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

class ConvergenceError : public ComputeError {
 public:
  using ComputeError::ComputeError;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  double v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InputError("cannot parse number '" + std::string(text) + "' for " +
                     std::string(what));
  }
  return v;
}

inline long long parse_int(std::string_view text, std::string_view what) {
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError("cannot parse integer '" + std::string(text) + "' for " +
                     std::string(what));
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic per-fold / per-purpose seed derivation.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = char((base >> (8 * i)) & 0xff);
  return fnv1a64(tag, fnv1a64(std::string_view(bytes, 8)));
}

// mt19937_64 has a standard-specified output sequence; the std:: distribution
// adapters do not. These transforms keep generated artifacts byte-stable
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + std::int64_t(x % span);
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  std::int64_t poisson(double mean) {
    if (mean <= 0) return 0;
    if (mean > 500) {  // normal approximation before exp(-mean) underflows
      const double x = mean + std::sqrt(mean) * normal();
      return x < 0 ? 0 : std::int64_t(std::llround(x));
    }
    const double limit = std::exp(-mean);
    double prod = uniform01();
    std::int64_t n = 0;
    while (prod > limit) {
      prod *= uniform01();
      ++n;
    }
    return n;
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0;
};

// Runs fn(0..n) across up to `jobs` threads. Results must be written to
// per-index slots by the caller; assembly order is index order regardless of
// scheduling. The first exception (by index) is rethrown.
inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(std::size_t(jobs), n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  std::size_t cursor = 0;
  std::mutex mu;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (cursor >= n) return;
          i = cursor++;
        }
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace povmap
