#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "evi/retrieval/embedding.hpp"

namespace evi {

// Joint image+text embedding function. A store remembers the fingerprint of
// the embedder it was built with; queries must use a matching one.
class Embedder {
public:
    virtual ~Embedder() = default;

    virtual EmbeddingVector embed(const std::string& image_ref, const std::string& text) const = 0;

    // Stable identifier of the embedding function (family, version, params).
    virtual std::string fingerprint() const = 0;
};

// Deterministic stand-in for a multimodal encoder: hashes the (image_ref,
// text) pair into a seeded pseudo-random unit vector. Same inputs + same
// seed + same dim => bit-identical vector on every platform.
class TestEmbedder : public Embedder {
public:
    explicit TestEmbedder(std::uint64_t seed = 42, std::size_t dim = 16);

    EmbeddingVector embed(const std::string& image_ref, const std::string& text) const override;
    std::string fingerprint() const override;

    std::uint64_t seed() const { return seed_; }
    std::size_t dim() const { return dim_; }

    // Reconstructs an embedder from its own fingerprint string
    // ("test-embedder/v1/seed=<s>/dim=<d>"); nullptr when the fingerprint
    // belongs to a different embedder family.
    static std::unique_ptr<TestEmbedder> from_fingerprint(const std::string& fingerprint);

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

// Adapter for an embedding service: POST {image_ref, text} -> {vector};
// GET /fingerprint -> {fingerprint}. See README for the wire contract.
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(std::string endpoint, int timeout_ms = 30000);

    EmbeddingVector embed(const std::string& image_ref, const std::string& text) const override;
    std::string fingerprint() const override;

private:
    std::string endpoint_;
    int timeout_ms_;
    mutable std::string cached_fingerprint_;
};

}  // namespace evi
