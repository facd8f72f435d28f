#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trialrank/retrieval.hpp"

namespace trialrank {

/// (query_id, doc_id) -> grade. 0 not relevant, 1 excluded, 2 eligible.
class QrelSet {
  public:
    /// `query_id 0 doc_id grade` per line. Repeating a pair with the same grade
    /// is tolerated; a conflicting grade or a malformed line throws
    /// Error(malformed_qrels) naming `source` and the line number.
    [[nodiscard]] static QrelSet parse(std::istream& in, const std::string& source = "<qrels>");
    [[nodiscard]] static QrelSet load(const std::filesystem::path& path);

    void add(const std::string& query_id, const std::string& doc_id, int grade);

    /// 0 for unjudged documents.
    [[nodiscard]] int grade(const std::string& query_id, const std::string& doc_id) const;
    /// Judgments of one query; empty for an unknown query.
    [[nodiscard]] const std::map<std::string, int>& judged(const std::string& query_id) const;
    [[nodiscard]] std::vector<std::string> queries() const;
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] bool empty() const noexcept { return judgments_.empty(); }

  private:
    std::map<std::string, std::map<std::string, int>> judgments_;
    std::size_t size_ = 0;
};

enum class Gain { linear, exponential };

struct EvalConfig {
    /// Minimum grade counted relevant by P@k and RR.
    int relevance_threshold = 1;
    Gain gain = Gain::linear;
    /// Cutoff of the NDCG@k and P@k columns; NDCG@5 is always reported.
    std::size_t cutoff = 10;
};

/// DCG over the run's top k against the ideal ordering of every judged document.
[[nodiscard]] double ndcg_at_k(const ScoredRun& run, const QrelSet& qrels, std::size_t k, Gain gain = Gain::linear);
[[nodiscard]] double prec_at_k(const ScoredRun& run, const QrelSet& qrels, std::size_t k, int threshold = 1);
[[nodiscard]] double reciprocal_rank(const ScoredRun& run, const QrelSet& qrels, int threshold = 1);

/// Two columns: `query_id value`. Throws Error(io_failure) on bad input.
[[nodiscard]] std::map<std::string, double> load_medians(const std::filesystem::path& path);
[[nodiscard]] std::map<std::string, double> parse_medians(std::istream& in, const std::string& source = "<medians>");

struct MedianComparison {
    std::size_t improved = 0;
    /// Number of queries in the median file.
    std::size_t total = 0;
    double fraction = 0.0;
    /// Queries with a value but no median; excluded from the count.
    std::vector<std::string> missing;
};

/// Counts queries whose value is strictly above the median. Queries listed in
/// the median file without a value count as not improved.
[[nodiscard]] MedianComparison compare_to_median(const std::map<std::string, double>& values,
                                                 const std::map<std::string, double>& medians);

struct QueryMetrics {
    std::string query_id;
    double ndcg_k = 0.0;
    double ndcg5 = 0.0;
    double p_k = 0.0;
    double rr = 0.0;
};

struct EvalReport {
    std::string run_name;
    std::size_t cutoff = 10;
    /// One row per query in the qrels, sorted by query id.
    std::vector<QueryMetrics> per_query;
    QueryMetrics mean;
    /// metric name -> comparison.
    std::map<std::string, MedianComparison> vs_median;
};

/// Evaluates every qrels query; a query the run lacks scores 0 everywhere.
[[nodiscard]] EvalReport evaluate_runs(const std::map<std::string, ScoredRun>& runs, const QrelSet& qrels,
                                       const EvalConfig& config = {}, const std::string& run_name = {});

/// Metric names: ndcg@<cutoff>, ndcg@5, p@<cutoff>, rr.
[[nodiscard]] std::vector<std::string> metric_names(const EvalReport& report);
/// Throws Error(invalid_config) for a name outside metric_names(report).
[[nodiscard]] double metric_value(const EvalReport& report, const QueryMetrics& m, const std::string& name);

/// Adds a comparison for `metric` against a median table.
void attach_median(EvalReport& report, const std::string& metric, const std::map<std::string, double>& medians);

[[nodiscard]] std::string format_report_table(const EvalReport& report);
[[nodiscard]] std::string report_to_json(const EvalReport& report);

}  // namespace trialrank
