#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace avc {

enum class ErrorCode {
  parse,
  validation,
  index,
  islanding,
  bounds,
  not_converged,
  singular,
  io,
  config,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// splitmix64 mix step; the documented seed-splitting primitive used for
/// fold seeds and per-index scenario streams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed from (master, index).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic RNG. mt19937_64 is fully specified by the standard; the
/// distribution helpers below are hand-rolled so streams do not depend on
/// the standard library's unspecified distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one draw per call, second discarded).
  double normal();

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a 64-bit checksum, used by the checkpoint format.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Shortest decimal form that round-trips a double (printf %.17g trimmed).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> split_ws(const std::string& line);
std::vector<std::string> split_char(const std::string& s, char sep);

}  // namespace avc
