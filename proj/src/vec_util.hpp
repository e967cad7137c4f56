#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace graphtrack::detail {

/// Cosine similarity; 0 when either vector has zero norm or the lengths differ.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  // single square root keeps cosine(a, a) exactly 1
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace graphtrack::detail
