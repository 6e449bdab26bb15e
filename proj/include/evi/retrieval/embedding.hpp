#pragma once

#include <vector>

namespace evi {

using EmbeddingVector = std::vector<double>;

double l2_norm(const EmbeddingVector& v);

// Cosine similarity clamped into [-1, 1]. Throws DimensionError on length
// mismatch, DegenerateVectorError when either norm is zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace evi
