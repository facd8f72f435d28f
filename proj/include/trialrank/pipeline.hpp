#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trialrank/corpus.hpp"
#include "trialrank/embedding.hpp"
#include "trialrank/fusion.hpp"
#include "trialrank/index.hpp"
#include "trialrank/keywords.hpp"
#include "trialrank/retrieval.hpp"

namespace trialrank {

enum class QueryRepresentation { verbose, keywords };
enum class RelevanceModel { bm25, tt_mw, bm25_reranker };

struct EmbeddingSettings {
    /// hashed, http or none (cache only).
    std::string provider = "hashed";
    std::string endpoint;
    std::filesystem::path cache;
    std::size_t dim = HashedBagOfWordsProvider::default_dim;
    unsigned timeout_ms = 10000;
};

struct RunConfig {
    std::string run_name = "run";
    QueryRepresentation representation = QueryRepresentation::verbose;
    std::vector<View> views{View::comb};
    RelevanceModel model = RelevanceModel::bm25;
    Bm25Params bm25;
    KeywordConfig keywords;
    CriteriaSpecs criteria = make_criteria();
    std::size_t pool_depth = 1000;
    /// Rows kept per query in the output run.
    std::size_t depth = 1000;
    std::string collection = "trials";
    std::filesystem::path index_dir = "index";
    std::filesystem::path output = "run.trec";
    /// Precomputed keyword dump; extraction runs when empty.
    std::filesystem::path keyword_dump;
    /// `query_id doc_id score` file for the reranker; identity when empty.
    std::filesystem::path reranker_scores;
    std::filesystem::path diagnostics_dir;
    EmbeddingSettings embedding;

    /// Throws Error(invalid_config) when the model and views disagree or a
    /// parameter is out of range.
    void validate() const;
};

/// Flat `key = value` lines; `#` starts a comment. Paths are taken as given.
/// Throws Error(invalid_config) on unknown keys or bad values.
[[nodiscard]] RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

[[nodiscard]] std::string_view model_name(RelevanceModel model) noexcept;
[[nodiscard]] std::string_view representation_name(QueryRepresentation rep) noexcept;

/// Line-delimited `query_id<TAB>text`, or topic markup
/// `<topic number="...">text</topic>`. Throws Error(malformed_record) or
/// Error(io_failure).
[[nodiscard]] std::vector<Query> parse_queries(std::string_view content, const std::string& source = "<queries>");
[[nodiscard]] std::vector<Query> load_queries(const std::filesystem::path& path);

/// Per-view indexes loaded from `<dir>/<collection>.<view>.idx`.
class IndexSet {
  public:
    /// Throws Error(missing_index) when a file does not exist.
    [[nodiscard]] static IndexSet load(const std::filesystem::path& dir, const std::string& collection,
                                       const std::vector<View>& views);
    void add(View view, PostingsIndex index);
    /// Throws Error(missing_index) for a view that was not loaded.
    [[nodiscard]] const PostingsIndex& at(View view) const;

  private:
    std::map<View, PostingsIndex> indexes_;
};

/// Builds and saves one index per view. Returns the written paths.
std::vector<std::filesystem::path> build_indexes(const std::vector<CorpusRecord>& corpus,
                                                 const std::filesystem::path& dir, const std::string& collection,
                                                 const std::vector<View>& views, unsigned threads = 1);

/// Cache wrapped around the configured provider, preloaded from settings.cache.
/// The endpoint falls back to the TRIALRANK_EMBEDDING_URL environment variable.
[[nodiscard]] std::shared_ptr<CachedEmbedder> make_embedder(const EmbeddingSettings& settings);

/// Fills keyword_terms of every query with extract_keywords.
std::map<std::string, KeywordResult> extract_query_keywords(std::vector<Query>& queries, EmbeddingProvider& embedder,
                                                            const KeywordConfig& config, unsigned threads = 1);

/// Analysed search terms for the chosen representation. Keyword terms must
/// already be attached for the keyword representation.
[[nodiscard]] TokenStream query_terms(const Query& query, QueryRepresentation rep,
                                      const Analyzer& analyzer = Analyzer{});

/// Ranks every query with the configured model; output follows input order.
/// Keyword representations need keyword_terms set on each query.
[[nodiscard]] std::vector<ScoredRun> run_pipeline(const RunConfig& config, const std::vector<Query>& queries,
                                                  const IndexSet& indexes, Reranker* reranker = nullptr,
                                                  unsigned threads = 1);

/// Loads indexes, prepares query keywords (from the dump or by extraction),
/// runs the pipeline and writes config.output.
std::vector<ScoredRun> run_from_config(const RunConfig& config, std::vector<Query> queries, unsigned threads = 1);

}  // namespace trialrank
