#include "trialrank/embedding.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trialrank/error.hpp"
#include "trialrank/textproc.hpp"

namespace trialrank {

namespace {

std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

EmbeddingVector HashedBagOfWordsProvider::embed(std::string_view text)
{
    auto tokens = tokenize(text);
    if (tokens.empty()) {
        tokens.emplace_back(text);
    }
    EmbeddingVector v{std::vector<double>(dim_, 0.0)};
    for (const auto& token : tokens) {
        std::uint64_t state = fnv1a64(token) ^ seed_;
        for (auto& x : v.values) {
            // 53 random bits -> [0, 1) -> [-1, 1)
            double unit = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            x += 2.0 * unit - 1.0;
        }
    }
    return v;
}

EmbeddingVector CachedEmbedder::embed(std::string_view text)
{
    std::string key(text);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return it->second;
        }
        if (!provider_) {
            throw Error(ErrorCode::provider_unavailable, "cache miss and no provider configured: '" + key + "'");
        }
    }
    auto v = provider_->embed(text);
    std::lock_guard lock(mutex_);
    ++provider_calls_;
    check_dim(v.dim(), text);
    auto [it, inserted] = cache_.emplace(std::move(key), std::move(v));
    return it->second;
}

void CachedEmbedder::check_dim(std::size_t dim, std::string_view text)
{
    if (dim == 0) {
        throw Error(ErrorCode::dimension_mismatch, "empty vector for '" + std::string(text) + "'");
    }
    if (!expected_dim_) {
        expected_dim_ = dim;
    } else if (*expected_dim_ != dim) {
        throw Error(ErrorCode::dimension_mismatch, "expected dim " + std::to_string(*expected_dim_) + ", got " +
                                                       std::to_string(dim) + " for '" + std::string(text) + "'");
    }
}

void CachedEmbedder::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        return;
    }
    std::string line;
    std::size_t lineno = 0;
    std::lock_guard lock(mutex_);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto row = nlohmann::json::parse(line, nullptr, false);
        auto where = path.string() + ":" + std::to_string(lineno);
        if (row.is_discarded() || !row.is_object() || !row.contains("text") || !row.contains("dim") ||
            !row.contains("values")) {
            throw Error(ErrorCode::io_failure, where + ": malformed cache record");
        }
        try {
            auto text = row.at("text").get<std::string>();
            auto dim = row.at("dim").get<std::size_t>();
            EmbeddingVector v{row.at("values").get<std::vector<double>>()};
            if (v.dim() != dim) {
                throw Error(ErrorCode::dimension_mismatch, where + ": dim field disagrees with values");
            }
            check_dim(dim, text);
            cache_[std::move(text)] = std::move(v);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::io_failure, where + ": " + e.what());
        }
    }
}

void CachedEmbedder::save(const std::filesystem::path& path) const
{
    std::lock_guard lock(mutex_);
    std::vector<const std::string*> keys;
    keys.reserve(cache_.size());
    for (const auto& entry : cache_) {
        keys.push_back(&entry.first);
    }
    std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    for (const auto* key : keys) {
        const auto& v = cache_.at(*key);
        nlohmann::ordered_json row;
        row["text"] = *key;
        row["dim"] = v.dim();
        row["values"] = v.values;
        out << row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed: " + path.string());
    }
}

std::size_t CachedEmbedder::size() const
{
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::size_t CachedEmbedder::provider_calls() const
{
    std::lock_guard lock(mutex_);
    return provider_calls_;
}

}  // namespace trialrank
