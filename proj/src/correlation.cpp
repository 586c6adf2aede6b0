#include "canclust/correlation.hpp"

#include "canclust/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>

namespace canclust {

DissimilarityKind parse_dissimilarity_kind(std::string_view name) {
  if (name == "abs" || name == "one_minus_abs_rho") return DissimilarityKind::one_minus_abs_rho;
  if (name == "signed" || name == "half_one_minus_rho") return DissimilarityKind::half_one_minus_rho;
  throw ConfigError("unknown dissimilarity '" + std::string(name) + "' (expected abs or signed)");
}

std::string_view to_string(DissimilarityKind kind) {
  switch (kind) {
    case DissimilarityKind::one_minus_abs_rho: return "one_minus_abs_rho";
    case DissimilarityKind::half_one_minus_rho: return "half_one_minus_rho";
  }
  return "?";
}

CorrelationMatrix pearson_matrix(const SignalMatrix& m) {
  const auto n = m.signal_count();
  if (n < 2) {
    throw DataError(m.capture_id + ": need at least 2 non-constant signals to correlate, have " +
                    std::to_string(n));
  }
  if (m.length() < 2) throw DataError(m.capture_id + ": need at least 2 samples per signal");

  CorrelationMatrix c{m.signal_ids, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    c.rho(i, i) = 1.0;
    const auto xi = m.data.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = m.data.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < xi.size(); ++t) dot += xi[t] * xj[t];
      assert(std::isfinite(dot));
      dot = std::clamp(dot, -1.0, 1.0);
      c.rho(i, j) = dot;
      c.rho(j, i) = dot;
    }
  }
  return c;
}

DissimilarityMatrix to_dissimilarity(const CorrelationMatrix& c, DissimilarityKind kind) {
  const auto n = c.signal_ids.size();
  DissimilarityMatrix out{c.signal_ids, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double rho = std::clamp(c.rho(i, j), -1.0, 1.0);
      out.d(i, j) = kind == DissimilarityKind::one_minus_abs_rho ? 1.0 - std::abs(rho) : (1.0 - rho) / 2.0;
    }
  }
  return out;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& m) {
  out << "signal";
  for (const auto& id : ids) out << ',' << id;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
}

} // namespace canclust
