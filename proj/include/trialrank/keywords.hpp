#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trialrank/embedding.hpp"
#include "trialrank/textproc.hpp"

namespace trialrank {

struct CandidatePhrase {
    std::string surface;
    std::size_t token_count;
    EmbeddingVector vector;
};

/// What the selection budget counts.
enum class BudgetUnit { tokens, phrases };

struct KeywordConfig {
    /// Weight of query relevance against redundancy with already-selected phrases.
    double lambda = 0.5;
    BudgetUnit unit = BudgetUnit::tokens;
    /// Rescale similarities as in the EmbedRank++ reference code before MMR.
    bool standardize_similarities = false;

    /// Throws Error(invalid_config) unless lambda is in [0, 1].
    void validate() const;
};

/// ceil(filtered_query_length / 2).
[[nodiscard]] std::size_t keyword_budget(std::size_t filtered_query_length) noexcept;

/// Distinct non-stopword unigrams (first-occurrence order) followed by the
/// distinct bigrams of adjacent non-stopword tokens, each embedded.
/// Throws Error(empty_query) when nothing survives stopword removal.
[[nodiscard]] std::vector<CandidatePhrase> generate_candidates(std::string_view query_text,
                                                               EmbeddingProvider& embedder,
                                                               const Stoplist& stoplist = Stoplist::english());

/// Throws Error(dimension_mismatch) or Error(zero_vector).
[[nodiscard]] double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Greedy maximal marginal relevance. The first pick maximises similarity to
/// the query; each later pick maximises
///   lambda * sim(c, query) - (1 - lambda) * max_{s selected} sim(c, s).
/// Stops once the selected phrases reach `budget` (in config.unit) or the
/// candidates run out. Equal scores go to the lexicographically smallest
/// surface. Returns surfaces in selection order.
/// Throws Error(empty_query) when `candidates` is empty.
[[nodiscard]] std::vector<std::string> mmr_select(const EmbeddingVector& query_vec,
                                                  std::span<const CandidatePhrase> candidates,
                                                  const KeywordConfig& config,
                                                  std::size_t budget);

/// Splits phrases into tokens, keeping the first occurrence of each.
[[nodiscard]] std::vector<std::string> flatten_keywords(std::span<const std::string> phrases);

struct KeywordResult {
    std::vector<std::string> phrases;
    std::vector<std::string> terms;
    std::size_t budget = 0;
};

/// Embeds the query, generates candidates and runs mmr_select with the
/// dynamic half-length budget.
[[nodiscard]] KeywordResult extract_keywords(std::string_view query_text,
                                             EmbeddingProvider& embedder,
                                             const KeywordConfig& config = {},
                                             const Stoplist& stoplist = Stoplist::english());

/// Keyword dump: one {"query_id", "terms", "phrases"} JSON object per line.
void write_keyword_dump(const std::filesystem::path& path, const std::map<std::string, KeywordResult>& results);
/// query_id -> terms. Throws Error(io_failure) on unreadable or malformed input.
[[nodiscard]] std::map<std::string, std::vector<std::string>> read_keyword_dump(const std::filesystem::path& path);

}  // namespace trialrank
