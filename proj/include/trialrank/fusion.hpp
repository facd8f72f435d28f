#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "trialrank/retrieval.hpp"

namespace trialrank {

enum class Direction { benefit, cost };

struct CriterionSpec {
    std::string name;
    Direction direction;
    double weight;
};

/// Column order of every matrix row.
enum Criterion : std::size_t { r_in = 0, r_ex = 1, r_main = 2 };
inline constexpr std::size_t num_criteria = 3;

using CriteriaSpecs = std::array<CriterionSpec, num_criteria>;

/// R_in and R_main benefit, R_ex cost, weights w_in, w_ex, w_main.
/// Throws Error(invalid_config) unless weights are in (0,1) and sum to 1 within 1e-9.
[[nodiscard]] CriteriaSpecs make_criteria(double w_in = 1.0 / 3.0, double w_ex = 1.0 / 3.0,
                                          double w_main = 1.0 / 3.0);
void validate_criteria(const CriteriaSpecs& criteria);

struct MatrixRow {
    std::string doc_id;
    std::array<double, num_criteria> values{};
};

struct DecisionMatrix {
    std::string query_id;
    std::vector<MatrixRow> rows;
    CriteriaSpecs criteria = make_criteria();
};

/// Pools the union of each run's top `pool_depth` documents (first appearance
/// order across in, ex, main) and fills absent scores with 0.
/// Throws Error(query_id_mismatch) or Error(invalid_config) for pool_depth 0.
[[nodiscard]] DecisionMatrix build_decision_matrix(const ScoredRun& run_in, const ScoredRun& run_ex,
                                                   const ScoredRun& run_main, std::size_t pool_depth = 1000,
                                                   const CriteriaSpecs& criteria = make_criteria());

/// v[d,c] = w_c * x[d,c] / ||x[.,c]||; all-zero columns stay zero.
[[nodiscard]] std::vector<MatrixRow> normalize_and_weight(const DecisionMatrix& matrix);

struct IdealSolutions {
    std::array<double, num_criteria> positive{};
    std::array<double, num_criteria> negative{};
};

[[nodiscard]] IdealSolutions ideal_solutions(const std::vector<MatrixRow>& weighted, const CriteriaSpecs& criteria);

struct Closeness {
    std::string doc_id;
    double d_plus;
    double d_minus;
    double closeness;
};

struct TopsisResult {
    std::vector<MatrixRow> weighted;
    IdealSolutions ideals;
    /// Sorted by closeness descending, then doc_id ascending.
    std::vector<Closeness> ranking;
};

/// Throws Error(empty_matrix) for a matrix without rows.
[[nodiscard]] TopsisResult topsis(const DecisionMatrix& matrix);
[[nodiscard]] std::vector<Closeness> topsis_rank(const DecisionMatrix& matrix);

/// Closeness as score, ranks from 1, at most k entries.
[[nodiscard]] ScoredRun to_scored_run(const std::string& query_id, const std::vector<Closeness>& ranking,
                                      const std::string& run_tag, std::size_t k);

/// Fuses one query; an empty pool yields an empty run.
[[nodiscard]] ScoredRun fuse_runs(const ScoredRun& run_in, const ScoredRun& run_ex, const ScoredRun& run_main,
                                  const std::string& run_tag, std::size_t k = 1000, std::size_t pool_depth = 1000,
                                  const CriteriaSpecs& criteria = make_criteria(),
                                  const std::filesystem::path& diagnostics_dir = {});

/// JSON dump of the weighted matrix, both ideals and the per-document distances.
void write_topsis_diagnostics(const std::filesystem::path& path, const std::string& query_id,
                              const TopsisResult& result, const CriteriaSpecs& criteria);

}  // namespace trialrank
