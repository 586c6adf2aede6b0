#pragma once

#include "canclust/ingest.hpp"
#include "canclust/matrix.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace canclust {

struct CorrelationMatrix {
  std::vector<std::string> signal_ids;
  Matrix rho;
};

struct DissimilarityMatrix {
  std::vector<std::string> signal_ids;
  Matrix d;
};

enum class DissimilarityKind {
  one_minus_abs_rho,   // 1 - |rho|: anti-correlated signals count as close
  half_one_minus_rho,  // (1 - rho) / 2: sign-sensitive
};

DissimilarityKind parse_dissimilarity_kind(std::string_view name);
std::string_view to_string(DissimilarityKind kind);

/// Pairwise Pearson correlation of the rows of `m`.
///
/// Rows of a SignalMatrix are centered with unit norm, so each entry is a
/// plain dot product. Entries are computed once for i < j and mirrored; the
/// diagonal is set to 1.
CorrelationMatrix pearson_matrix(const SignalMatrix& m);

DissimilarityMatrix to_dissimilarity(const CorrelationMatrix& c,
                                     DissimilarityKind kind = DissimilarityKind::one_minus_abs_rho);

/// Square matrix as CSV with a header row and column of signal ids.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& m);

} // namespace canclust
