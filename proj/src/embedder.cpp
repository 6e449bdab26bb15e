#include "evi/retrieval/embedder.hpp"

#include <random>

#include "httplib.h"

#include "evi/errors.hpp"
#include "evi/jsonutil.hpp"

namespace evi {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= kFnvPrime;
    }
}

// Uniform double in [0, 1) from raw engine output; avoids
// std::uniform_real_distribution, whose mapping is implementation-defined.
double to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace

TestEmbedder::TestEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim_ == 0) throw DimensionError("embedding dimension must be at least 1");
}

EmbeddingVector TestEmbedder::embed(const std::string& image_ref, const std::string& text) const {
    std::uint64_t h = kFnvOffset;
    unsigned char seed_bytes[8];
    for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<unsigned char>(seed_ >> (8 * i));
    fnv_mix(h, seed_bytes, sizeof seed_bytes);
    fnv_mix(h, image_ref.data(), image_ref.size());
    const unsigned char sep = 0x1F;  // unit separator: "ab"+"c" != "a"+"bc"
    fnv_mix(h, &sep, 1);
    fnv_mix(h, text.data(), text.size());

    std::mt19937_64 rng(h);
    EmbeddingVector v(dim_);
    for (std::size_t d = 0; d < dim_; ++d) v[d] = 2.0 * to_unit(rng()) - 1.0;

    double norm = l2_norm(v);
    if (norm < 1e-12) {
        // astronomically unlikely, but the contract guarantees nonzero norm
        v[0] = 1.0;
        norm = 1.0;
    }
    for (double& x : v) x /= norm;
    return v;
}

std::string TestEmbedder::fingerprint() const {
    return "test-embedder/v1/seed=" + std::to_string(seed_) + "/dim=" + std::to_string(dim_);
}

std::unique_ptr<TestEmbedder> TestEmbedder::from_fingerprint(const std::string& fingerprint) {
    const std::string prefix = "test-embedder/v1/seed=";
    if (fingerprint.rfind(prefix, 0) != 0) return nullptr;
    auto dim_at = fingerprint.find("/dim=", prefix.size());
    if (dim_at == std::string::npos) return nullptr;
    try {
        std::uint64_t seed = std::stoull(fingerprint.substr(prefix.size(), dim_at - prefix.size()));
        std::size_t dim = std::stoull(fingerprint.substr(dim_at + 5));
        return std::make_unique<TestEmbedder>(seed, dim);
    } catch (const std::exception&) {
        return nullptr;
    }
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, int timeout_ms)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}

EmbeddingVector RemoteEmbedder::embed(const std::string& image_ref, const std::string& text) const {
    auto scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw BackendUnavailable("embedder endpoint is not a valid URL: " + endpoint_);
    auto path_begin = endpoint_.find('/', scheme_end + 3);
    std::string host = path_begin == std::string::npos ? endpoint_ : endpoint_.substr(0, path_begin);
    std::string base = path_begin == std::string::npos ? "" : endpoint_.substr(path_begin);

    httplib::Client client(host);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    Json body{{"image_ref", image_ref}, {"text", text}};
    auto res = client.Post(base + "/embed", body.dump(), "application/json");
    if (!res || res->status != 200)
        throw BackendUnavailable("embedder endpoint unavailable: " + endpoint_);
    Json reply = parse_lenient(res->body);
    if (reply.is_discarded() || !reply.contains("vector") || !reply["vector"].is_array())
        throw BackendUnavailable("embedder response must carry a 'vector' array");
    return reply["vector"].get<EmbeddingVector>();
}

std::string RemoteEmbedder::fingerprint() const {
    if (!cached_fingerprint_.empty()) return cached_fingerprint_;
    auto scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos)
        throw BackendUnavailable("embedder endpoint is not a valid URL: " + endpoint_);
    auto path_begin = endpoint_.find('/', scheme_end + 3);
    std::string host = path_begin == std::string::npos ? endpoint_ : endpoint_.substr(0, path_begin);
    std::string base = path_begin == std::string::npos ? "" : endpoint_.substr(path_begin);

    httplib::Client client(host);
    client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    auto res = client.Get(base + "/fingerprint");
    if (!res || res->status != 200)
        throw BackendUnavailable("embedder endpoint unavailable: " + endpoint_);
    Json reply = parse_lenient(res->body);
    if (reply.is_discarded() || !reply.contains("fingerprint") ||
        !reply["fingerprint"].is_string())
        throw BackendUnavailable("embedder response must carry a 'fingerprint' string");
    cached_fingerprint_ = reply["fingerprint"].get<std::string>();
    return cached_fingerprint_;
}

}  // namespace evi
