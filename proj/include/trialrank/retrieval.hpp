#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trialrank/index.hpp"

namespace trialrank {

/// A patient query. `keyword_terms` holds the extracted keyword
/// representation when one has been computed.
struct Query {
    std::string query_id;
    std::string text;
    std::vector<std::string> keyword_terms;
};

struct RunEntry {
    std::string doc_id;
    double score;
    int rank;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// Ranked results for one query: scores non-increasing, ranks 1..n.
struct ScoredRun {
    std::string query_id;
    std::string run_tag;
    std::vector<RunEntry> entries;

    friend bool operator==(const ScoredRun&, const ScoredRun&) = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    /// Throws Error(invalid_config) unless k1 > 0 and 0 <= b <= 1.
    void validate() const;
};

/// ln((N - df + 0.5) / (df + 0.5) + 1); strictly positive for df <= N.
[[nodiscard]] double bm25_idf(std::size_t num_docs, std::size_t df);

/// Sum over query term occurrences of idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl)).
/// Terms missing from the document or dictionary contribute nothing.
/// Throws Error(unknown_document) for an out-of-range ordinal.
[[nodiscard]] double bm25_score(std::span<const std::string> query_terms,
                                DocOrdinal doc,
                                const PostingsIndex& index,
                                const Bm25Params& params = {});

/// Top-k documents by BM25, zero scores excluded, ties broken by ascending doc_id.
/// Throws Error(empty_index) when the index holds no documents.
[[nodiscard]] ScoredRun search(std::span<const std::string> query_terms,
                               const PostingsIndex& index,
                               std::size_t k,
                               std::string_view run_tag,
                               std::string_view query_id = {},
                               const Bm25Params& params = {});

/// Sorts entries by score descending then doc_id ascending, truncates to k
/// and assigns ranks 1..n.
void finalize_ranking(ScoredRun& run, std::size_t k);

/// External (query, document) scorer used to reorder a first-stage run.
class Reranker {
  public:
    virtual ~Reranker() = default;
    /// One score per entry, aligned with `entries`.
    [[nodiscard]] virtual std::vector<double> score(std::string_view query_id,
                                                    std::span<const RunEntry> entries) = 0;
};

/// Returns each entry's existing score.
class IdentityReranker final : public Reranker {
  public:
    [[nodiscard]] std::vector<double> score(std::string_view query_id, std::span<const RunEntry> entries) override;
};

/// Scores read from a whitespace-separated `query_id doc_id score` file.
/// A pair missing from the file raises Error(reranker_unavailable).
class ScoreListReranker final : public Reranker {
  public:
    explicit ScoreListReranker(std::map<std::string, std::map<std::string, double>> scores)
        : scores_(std::move(scores))
    {}
    [[nodiscard]] static ScoreListReranker load(const std::filesystem::path& path);

    [[nodiscard]] std::vector<double> score(std::string_view query_id, std::span<const RunEntry> entries) override;

  private:
    std::map<std::string, std::map<std::string, double>> scores_;
};

/// Reorders `run` by reranker score (descending, stable with respect to the
/// input order) and replaces scores with the reranker's.
/// Throws Error(reranker_unavailable) when no reranker is given or it
/// returns the wrong number of scores.
[[nodiscard]] ScoredRun rerank_hook(const ScoredRun& run, Reranker* reranker);

/// `<query_id> Q0 <doc_id> <rank> <score> <run_tag>`, score with 6 decimals.
void write_trec_run(std::ostream& out, const ScoredRun& run);
void write_trec_runs(const std::filesystem::path& path, const std::vector<ScoredRun>& runs);

/// Parses a TREC run file into runs keyed by query id. Entries are ordered
/// by the rank column. Throws Error(malformed_record) with the line number on
/// bad input, Error(io_failure) if unreadable.
[[nodiscard]] std::map<std::string, ScoredRun> read_trec_runs(std::istream& in);
[[nodiscard]] std::map<std::string, ScoredRun> read_trec_runs(const std::filesystem::path& path);

}  // namespace trialrank
