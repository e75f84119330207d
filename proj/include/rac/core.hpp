// Domain types shared by every module: embeddings, requests, traces, errors.

#ifndef RAC_CORE_HPP
#define RAC_CORE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rac {

using EntryId = std::uint64_t;
using TopicId = std::uint64_t;
using Step = std::uint64_t;  // 1-based request index; 0 means "never"

inline constexpr std::size_t kDefaultDim = 64;

// Caller misused an API (bad arguments, violated precondition).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Data failed an invariant check.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Unit-norm, finite real vector. Construction normalizes unless told the
/// values are already normalized, in which case the norm is validated.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  static EmbeddingVector normalized(std::vector<double> values);
  /// Accepts values as-is; throws ValidationError unless |norm - 1| <= 1e-6.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// dot(a,b)/(|a||b|). Throws UsageError on dimension mismatch or a zero vector.
double cosine_sim(std::span<const double> a, std::span<const double> b);
double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b);

// Fast path for pre-normalized vectors; no checks.
inline double unit_dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0.0;
  const double* x = a.values().data();
  const double* y = b.values().data();
  for (std::size_t i = 0, n = a.dim(); i < n; ++i) s += x[i] * y[i];
  return s;
}

struct Request {
  std::uint64_t id = 0;
  Step t = 0;
  EmbeddingVector embedding;
  std::optional<std::int64_t> topic_truth;
  std::optional<std::uint64_t> parent_truth;
  std::optional<std::int64_t> exact_key;

  bool operator==(const Request&) const = default;
};

// `# session=<id> occurrence=<k>` delimiter placed before request `position`
// (0-based index into Trace::requests).
struct SessionMark {
  std::size_t position = 0;
  std::uint64_t session = 0;
  std::uint64_t occurrence = 0;

  bool operator==(const SessionMark&) const = default;
};

struct Trace {
  std::size_t dim = kDefaultDim;
  std::vector<Request> requests;
  std::vector<std::string> comments;  // leading `#` lines, stored without the '#'
  std::vector<SessionMark> sessions;

  std::size_t size() const { return requests.size(); }
  bool has_exact_keys() const;
  /// Throws ValidationError when any trace invariant is broken.
  void validate() const;

  bool operator==(const Trace&) const = default;
};

/// Rounds every component to 9 significant digits, the precision of the text
/// format, so that in-memory traces equal their reloaded form.
std::vector<double> quantize9(std::span<const double> values);

}  // namespace rac

#endif  // RAC_CORE_HPP
