#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trialrank {

struct EmbeddingVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    /// Throws Error(provider_unavailable) or Error(dimension_mismatch).
    [[nodiscard]] virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Offline provider: every token (lowercased alphanumeric run, or the whole
/// text if it has none) maps to a pseudo-random vector in [-1, 1)^dim drawn
/// from splitmix64 seeded with FNV-1a(token) xor `seed`; the text embedding
/// is the sum over its tokens. Reproducible across runs and platforms.
class HashedBagOfWordsProvider final : public EmbeddingProvider {
  public:
    static constexpr std::size_t default_dim = 256;
    static constexpr std::uint64_t default_seed = 0x7472696C72616E6BULL;  // "trilrank"

    explicit HashedBagOfWordsProvider(std::size_t dim = default_dim, std::uint64_t seed = default_seed)
        : dim_(dim), seed_(seed)
    {}

    [[nodiscard]] EmbeddingVector embed(std::string_view text) override;

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// POSTs {"text": ...} to `url` and expects {"vector": [...]} back.
class HttpEmbeddingProvider final : public EmbeddingProvider {
  public:
    /// `url` is http://host[:port]/path. Throws Error(invalid_config) if it cannot be parsed.
    HttpEmbeddingProvider(const std::string& url, std::chrono::milliseconds timeout);

    [[nodiscard]] EmbeddingVector embed(std::string_view text) override;

  private:
    std::string origin_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

/// Exact-text cache in front of an optional provider. Thread-safe.
/// A miss without a provider raises Error(provider_unavailable).
class CachedEmbedder final : public EmbeddingProvider {
  public:
    explicit CachedEmbedder(std::shared_ptr<EmbeddingProvider> provider = nullptr,
                            std::optional<std::size_t> expected_dim = std::nullopt)
        : provider_(std::move(provider)), expected_dim_(expected_dim)
    {}

    [[nodiscard]] EmbeddingVector embed(std::string_view text) override;

    /// Merges line-delimited {"text", "dim", "values"} records. Missing file is
    /// not an error. Throws Error(io_failure) on malformed lines and
    /// Error(dimension_mismatch) when a record disagrees with the cache's dim.
    void load(const std::filesystem::path& path);
    /// Rewrites the cache file sorted by text.
    void save(const std::filesystem::path& path) const;

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t provider_calls() const;

  private:
    void check_dim(std::size_t dim, std::string_view text);

    std::shared_ptr<EmbeddingProvider> provider_;
    std::optional<std::size_t> expected_dim_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> cache_;
    std::size_t provider_calls_ = 0;
};

}  // namespace trialrank
