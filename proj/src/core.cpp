#include "rac/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <unordered_map>
#include <unordered_set>

namespace rac {

namespace {

void require_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw ValidationError("embedding has a non-finite component");
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> values) {
  require_finite(values);
  const double n = norm2(values);
  if (n == 0.0) throw ValidationError("cannot normalize a zero vector");
  for (double& x : values) x /= n;
  return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  require_finite(values);
  if (std::abs(norm2(values) - 1.0) > 1e-6) {
    throw ValidationError("embedding is not unit-norm within 1e-6");
  }
  return EmbeddingVector(std::move(values));
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw UsageError("cosine_sim: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw UsageError("cosine_sim: zero vector");
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(s, -1.0, 1.0);
}

double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_sim(a.values(), b.values());
}

bool Trace::has_exact_keys() const {
  for (const auto& r : requests) {
    if (!r.exact_key) return false;
  }
  return !requests.empty();
}

void Trace::validate() const {
  std::unordered_map<std::uint64_t, Step> step_of;
  step_of.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const Request& r = requests[i];
    if (r.t != i + 1) {
      throw ValidationError("request " + std::to_string(r.id) + " has t=" + std::to_string(r.t) +
                            ", expected " + std::to_string(i + 1));
    }
    if (r.embedding.dim() != dim) {
      throw ValidationError("request " + std::to_string(r.id) + " has dimension " +
                            std::to_string(r.embedding.dim()) + ", trace dim is " +
                            std::to_string(dim));
    }
    require_finite(r.embedding.values());
    if (std::abs(norm2(r.embedding.values()) - 1.0) > 1e-6) {
      throw ValidationError("request " + std::to_string(r.id) + " embedding is not unit-norm");
    }
    if (r.parent_truth) {
      auto it = step_of.find(*r.parent_truth);
      if (it == step_of.end()) {
        throw ValidationError("request " + std::to_string(r.id) + " parent " +
                              std::to_string(*r.parent_truth) + " does not precede it");
      }
    }
    if (!step_of.emplace(r.id, r.t).second) {
      throw ValidationError("duplicate request id " + std::to_string(r.id));
    }
  }
  for (const auto& m : sessions) {
    if (m.position > requests.size()) throw ValidationError("session mark past end of trace");
  }
}

std::vector<double> quantize9(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out.push_back(std::strtod(buf, nullptr));
  }
  return out;
}

}  // namespace rac
