#include "trialrank/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "trialrank/error.hpp"

namespace trialrank {

CriteriaSpecs make_criteria(double w_in, double w_ex, double w_main)
{
    CriteriaSpecs c{CriterionSpec{"R_in", Direction::benefit, w_in}, CriterionSpec{"R_ex", Direction::cost, w_ex},
                    CriterionSpec{"R_main", Direction::benefit, w_main}};
    validate_criteria(c);
    return c;
}

void validate_criteria(const CriteriaSpecs& criteria)
{
    double sum = 0.0;
    for (const auto& c : criteria) {
        if (!(c.weight > 0.0 && c.weight < 1.0)) {
            throw Error(ErrorCode::invalid_config, "weight of " + c.name + " must lie in (0, 1)");
        }
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid_config, "criterion weights must sum to 1");
    }
}

DecisionMatrix build_decision_matrix(const ScoredRun& run_in, const ScoredRun& run_ex, const ScoredRun& run_main,
                                     std::size_t pool_depth, const CriteriaSpecs& criteria)
{
    if (run_in.query_id != run_ex.query_id || run_in.query_id != run_main.query_id) {
        throw Error(ErrorCode::query_id_mismatch, "runs for queries '" + run_in.query_id + "', '" + run_ex.query_id +
                                                      "', '" + run_main.query_id + "'");
    }
    if (pool_depth == 0) {
        throw Error(ErrorCode::invalid_config, "pool_depth must be at least 1");
    }
    DecisionMatrix m;
    m.query_id = run_in.query_id;
    m.criteria = criteria;
    std::unordered_map<std::string, std::size_t> row_of;
    const std::array<const ScoredRun*, num_criteria> runs{&run_in, &run_ex, &run_main};
    for (std::size_t c = 0; c < num_criteria; ++c) {
        const auto& entries = runs[c]->entries;
        auto depth = std::min(pool_depth, entries.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (row_of.emplace(entries[i].doc_id, m.rows.size()).second) {
                m.rows.push_back(MatrixRow{entries[i].doc_id, {}});
            }
        }
    }
    for (std::size_t c = 0; c < num_criteria; ++c) {
        for (const auto& e : runs[c]->entries) {
            if (auto it = row_of.find(e.doc_id); it != row_of.end()) {
                m.rows[it->second].values[c] = std::max(0.0, e.score);
            }
        }
    }
    return m;
}

std::vector<MatrixRow> normalize_and_weight(const DecisionMatrix& matrix)
{
    if (matrix.rows.empty()) {
        throw Error(ErrorCode::empty_matrix, "decision matrix for query '" + matrix.query_id + "' has no rows");
    }
    std::array<double, num_criteria> norm{};
    for (const auto& row : matrix.rows) {
        for (std::size_t c = 0; c < num_criteria; ++c) {
            norm[c] += row.values[c] * row.values[c];
        }
    }
    auto weighted = matrix.rows;
    for (std::size_t c = 0; c < num_criteria; ++c) {
        if (norm[c] == 0.0) {
            continue;
        }
        double scale = matrix.criteria[c].weight / std::sqrt(norm[c]);
        for (auto& row : weighted) {
            row.values[c] *= scale;
        }
    }
    return weighted;
}

IdealSolutions ideal_solutions(const std::vector<MatrixRow>& weighted, const CriteriaSpecs& criteria)
{
    if (weighted.empty()) {
        throw Error(ErrorCode::empty_matrix, "no rows to derive ideal solutions from");
    }
    IdealSolutions ideals;
    for (std::size_t c = 0; c < num_criteria; ++c) {
        auto [lo, hi] = std::minmax_element(weighted.begin(), weighted.end(), [c](const auto& a, const auto& b) {
            return a.values[c] < b.values[c];
        });
        bool benefit = criteria[c].direction == Direction::benefit;
        ideals.positive[c] = benefit ? hi->values[c] : lo->values[c];
        ideals.negative[c] = benefit ? lo->values[c] : hi->values[c];
    }
    return ideals;
}

TopsisResult topsis(const DecisionMatrix& matrix)
{
    TopsisResult result;
    result.weighted = normalize_and_weight(matrix);
    result.ideals = ideal_solutions(result.weighted, matrix.criteria);
    result.ranking.reserve(result.weighted.size());
    for (const auto& row : result.weighted) {
        double plus = 0.0;
        double minus = 0.0;
        for (std::size_t c = 0; c < num_criteria; ++c) {
            plus += (row.values[c] - result.ideals.positive[c]) * (row.values[c] - result.ideals.positive[c]);
            minus += (row.values[c] - result.ideals.negative[c]) * (row.values[c] - result.ideals.negative[c]);
        }
        Closeness cl{row.doc_id, std::sqrt(plus), std::sqrt(minus), 0.5};
        if (cl.d_plus + cl.d_minus > 0.0) {
            cl.closeness = cl.d_minus / (cl.d_plus + cl.d_minus);
        }
        result.ranking.push_back(std::move(cl));
    }
    std::sort(result.ranking.begin(), result.ranking.end(), [](const Closeness& a, const Closeness& b) {
        if (a.closeness != b.closeness) {
            return a.closeness > b.closeness;
        }
        return a.doc_id < b.doc_id;
    });
    return result;
}

std::vector<Closeness> topsis_rank(const DecisionMatrix& matrix)
{
    return topsis(matrix).ranking;
}

ScoredRun to_scored_run(const std::string& query_id, const std::vector<Closeness>& ranking,
                        const std::string& run_tag, std::size_t k)
{
    ScoredRun run{query_id, run_tag, {}};
    auto n = std::min(k, ranking.size());
    run.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        run.entries.push_back(RunEntry{ranking[i].doc_id, ranking[i].closeness, static_cast<int>(i + 1)});
    }
    return run;
}

ScoredRun fuse_runs(const ScoredRun& run_in, const ScoredRun& run_ex, const ScoredRun& run_main,
                    const std::string& run_tag, std::size_t k, std::size_t pool_depth, const CriteriaSpecs& criteria,
                    const std::filesystem::path& diagnostics_dir)
{
    auto matrix = build_decision_matrix(run_in, run_ex, run_main, pool_depth, criteria);
    if (matrix.rows.empty()) {
        return ScoredRun{matrix.query_id, run_tag, {}};
    }
    auto result = topsis(matrix);
    if (!diagnostics_dir.empty()) {
        write_topsis_diagnostics(diagnostics_dir / ("topsis." + matrix.query_id + ".json"), matrix.query_id, result,
                                 criteria);
    }
    return to_scored_run(matrix.query_id, result.ranking, run_tag, k);
}

void write_topsis_diagnostics(const std::filesystem::path& path, const std::string& query_id,
                              const TopsisResult& result, const CriteriaSpecs& criteria)
{
    nlohmann::ordered_json doc;
    doc["query_id"] = query_id;
    auto& crit = doc["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : criteria) {
        crit.push_back({{"name", c.name},
                        {"direction", c.direction == Direction::benefit ? "benefit" : "cost"},
                        {"weight", c.weight}});
    }
    doc["positive_ideal"] = result.ideals.positive;
    doc["negative_ideal"] = result.ideals.negative;
    auto& rows = doc["weighted"] = nlohmann::ordered_json::array();
    for (const auto& r : result.weighted) {
        rows.push_back({{"doc_id", r.doc_id}, {"values", r.values}});
    }
    auto& ranking = doc["ranking"] = nlohmann::ordered_json::array();
    for (const auto& c : result.ranking) {
        ranking.push_back(
            {{"doc_id", c.doc_id}, {"d_plus", c.d_plus}, {"d_minus", c.d_minus}, {"closeness", c.closeness}});
    }
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

}  // namespace trialrank
