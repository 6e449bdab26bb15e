#include "evi/retrieval/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "evi/errors.hpp"

namespace evi {

double l2_norm(const EmbeddingVector& v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size())
        throw DimensionError("cosine of vectors with dimensions " + std::to_string(a.size()) +
                             " and " + std::to_string(b.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    double na = l2_norm(a);
    double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw DegenerateVectorError("cosine is undefined for zero-norm vectors");
    return std::clamp(dot / (na * nb), -1.0, 1.0);
}

}  // namespace evi
