#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles/topsis_reference.hpp"
#include "trialrank/error.hpp"
#include "trialrank/fusion.hpp"

using namespace trialrank;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected trialrank::Error";
    return ErrorCode::invalid_config;
}

DecisionMatrix matrix_of(const std::vector<std::array<double, 3>>& rows)
{
    DecisionMatrix m;
    m.query_id = "q";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "d%02zu", i);
        m.rows.push_back(MatrixRow{name, rows[i]});
    }
    return m;
}

DecisionMatrix random_matrix(std::mt19937& rng, std::size_t max_docs)
{
    std::uniform_int_distribution<std::size_t> count(1, max_docs);
    std::uniform_real_distribution<double> score(0.0, 20.0);
    std::bernoulli_distribution zero(0.2);
    std::vector<std::array<double, 3>> rows(count(rng));
    for (auto& r : rows) {
        for (auto& v : r) {
            v = zero(rng) ? 0.0 : score(rng);
        }
    }
    return matrix_of(rows);
}

ScoredRun run_of(const std::string& qid, const std::vector<std::pair<std::string, double>>& scores)
{
    ScoredRun run{qid, "t", {}};
    int rank = 1;
    for (const auto& [doc, s] : scores) {
        run.entries.push_back(RunEntry{doc, s, rank++});
    }
    return run;
}

double closeness_of(const std::vector<Closeness>& ranking, const std::string& doc)
{
    auto it = std::find_if(ranking.begin(), ranking.end(), [&](const auto& c) { return c.doc_id == doc; });
    return it == ranking.end() ? -1.0 : it->closeness;
}

}  // namespace

TEST(Criteria, DefaultsAndValidation)
{
    auto c = make_criteria();
    EXPECT_EQ(c[r_in].direction, Direction::benefit);
    EXPECT_EQ(c[r_ex].direction, Direction::cost);
    EXPECT_EQ(c[r_main].direction, Direction::benefit);
    EXPECT_NEAR(c[0].weight + c[1].weight + c[2].weight, 1.0, 1e-12);
    EXPECT_EQ(code_of([] { (void)make_criteria(0.33, 0.33, 0.33); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)make_criteria(0.0, 0.5, 0.5); }), ErrorCode::invalid_config);
    EXPECT_NO_THROW((void)make_criteria(0.5, 0.25, 0.25));
}

TEST(DecisionMatrixBuild, UnionPoolWithZeroFill)
{
    auto in = run_of("q1", {{"A", 5.0}, {"B", 1.0}});
    auto ex = run_of("q1", {{"C", 2.0}});
    auto main = run_of("q1", {{"B", 3.0}, {"C", 1.0}});
    auto m = build_decision_matrix(in, ex, main, 1000);
    ASSERT_EQ(m.rows.size(), 3U);
    EXPECT_EQ(m.rows[0].doc_id, "A");
    EXPECT_EQ(m.rows[0].values, (std::array<double, 3>{5.0, 0.0, 0.0}));
    EXPECT_EQ(m.rows[1].values, (std::array<double, 3>{1.0, 0.0, 3.0}));
    EXPECT_EQ(m.rows[2].values, (std::array<double, 3>{0.0, 2.0, 1.0}));

    // Depth 1 pools A, C, B; B keeps its in-score though it is outside in's top 1.
    auto shallow = build_decision_matrix(in, ex, main, 1);
    ASSERT_EQ(shallow.rows.size(), 3U);
    EXPECT_EQ(shallow.rows[2].doc_id, "B");
    EXPECT_EQ(shallow.rows[2].values, (std::array<double, 3>{1.0, 0.0, 3.0}));

    EXPECT_TRUE(build_decision_matrix(run_of("q", {}), run_of("q", {}), run_of("q", {})).rows.empty());
    EXPECT_EQ(code_of([&] { (void)build_decision_matrix(in, ex, run_of("q2", {})); }),
              ErrorCode::query_id_mismatch);
    EXPECT_EQ(code_of([&] { (void)build_decision_matrix(in, ex, main, 0); }), ErrorCode::invalid_config);
}

TEST(DecisionMatrixBuild, PoolBoundedByDepth)
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<ScoredRun, 3> runs;
        for (auto& r : runs) {
            r.query_id = "q";
            int n = static_cast<int>(rng() % 30);
            for (int i = 0; i < n; ++i) {
                r.entries.push_back(RunEntry{"d" + std::to_string(rng() % 60), 1.0, i + 1});
            }
            std::sort(r.entries.begin(), r.entries.end(),
                      [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
            r.entries.erase(std::unique(r.entries.begin(), r.entries.end(),
                                        [](const auto& a, const auto& b) { return a.doc_id == b.doc_id; }),
                            r.entries.end());
        }
        std::size_t depth = 1 + rng() % 10;
        auto m = build_decision_matrix(runs[0], runs[1], runs[2], depth);
        EXPECT_LE(m.rows.size(), 3 * depth);
        std::set<std::string> ids;
        for (const auto& row : m.rows) {
            EXPECT_TRUE(ids.insert(row.doc_id).second);
        }
    }
}

TEST(Normalize, HandValues)
{
    auto m = matrix_of({{3, 0, 7}, {4, 0, 0}});
    auto w = normalize_and_weight(m);
    EXPECT_NEAR(w[0].values[r_in], 0.2, 1e-12);
    EXPECT_NEAR(w[1].values[r_in], 4.0 / 15.0, 1e-12);
    EXPECT_NEAR(w[1].values[r_in], 0.2667, 1e-4);
    EXPECT_EQ(w[0].values[r_ex], 0.0);
    EXPECT_EQ(w[1].values[r_ex], 0.0);
    EXPECT_NEAR(w[0].values[r_main], 1.0 / 3.0, 1e-15);

    auto single = normalize_and_weight(matrix_of({{2.5, 1e-3, 40}}));
    for (double v : single[0].values) {
        EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
    EXPECT_EQ(code_of([] { (void)normalize_and_weight(DecisionMatrix{}); }), ErrorCode::empty_matrix);
}

TEST(Ideals, CoordinateWise)
{
    auto criteria = make_criteria();
    std::vector<MatrixRow> rows{{"a", {0.3, 0.1, 0.2}}, {"b", {0.1, 0.4, 0.3}}};
    auto ideals = ideal_solutions(rows, criteria);
    EXPECT_EQ(ideals.positive, (std::array<double, 3>{0.3, 0.1, 0.3}));
    EXPECT_EQ(ideals.negative, (std::array<double, 3>{0.1, 0.4, 0.2}));

    auto one = ideal_solutions({{"a", {0.3, 0.1, 0.2}}}, criteria);
    EXPECT_EQ(one.positive, one.negative);
    EXPECT_EQ(code_of([&] { (void)ideal_solutions({}, criteria); }), ErrorCode::empty_matrix);
}

TEST(Topsis, HandComputedPair)
{
    auto m = matrix_of({{3, 2, 4}, {1, 0, 2}});
    m.rows[0].doc_id = "A";
    m.rows[1].doc_id = "B";
    auto ranking = topsis_rank(m);
    ASSERT_EQ(ranking.size(), 2U);
    EXPECT_EQ(ranking[0].doc_id, "B");
    EXPECT_NEAR(closeness_of(ranking, "A"), 0.4365, 5e-5);
    EXPECT_NEAR(closeness_of(ranking, "B"), 0.5635, 5e-5);
    EXPECT_NEAR(ranking[0].closeness + ranking[1].closeness, 1.0, 1e-12);
}

TEST(Topsis, DominantDocumentScoresOne)
{
    auto ranking = topsis_rank(matrix_of({{9, 0, 9}, {1, 3, 2}, {4, 1, 0}}));
    EXPECT_EQ(ranking[0].doc_id, "d00");
    EXPECT_DOUBLE_EQ(ranking[0].closeness, 1.0);
    EXPECT_EQ(ranking[0].d_plus, 0.0);
}

TEST(Topsis, MirroredDocumentScoresZero)
{
    auto ranking = topsis_rank(matrix_of({{9, 0, 9}, {0, 5, 0}, {4, 1, 3}}));
    EXPECT_EQ(ranking.back().doc_id, "d01");
    EXPECT_DOUBLE_EQ(ranking.back().closeness, 0.0);
}

TEST(Topsis, IdenticalRowsAreNeutral)
{
    auto ranking = topsis_rank(matrix_of({{2, 1, 2}, {2, 1, 2}, {2, 1, 2}}));
    ASSERT_EQ(ranking.size(), 3U);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(ranking[i].closeness, 0.5);
        EXPECT_EQ(ranking[i].doc_id, "d0" + std::to_string(i));
    }
    EXPECT_EQ(code_of([] { (void)topsis_rank(DecisionMatrix{}); }), ErrorCode::empty_matrix);
}

TEST(Topsis, MatchesReferenceImplementation)
{
    std::mt19937 rng(2021);
    std::uniform_real_distribution<double> wd(0.05, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        auto m = random_matrix(rng, 6);
        double a = wd(rng);
        double b = wd(rng);
        double c = wd(rng);
        double s = a + b + c;
        m.criteria = make_criteria(a / s, b / s, 1.0 - a / s - b / s);
        std::vector<std::vector<double>> x;
        for (const auto& r : m.rows) {
            x.emplace_back(r.values.begin(), r.values.end());
        }
        auto ref = oracle::topsis_reference(
            x, {m.criteria[0].weight, m.criteria[1].weight, m.criteria[2].weight}, {true, false, true});
        auto ranking = topsis_rank(m);
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
            EXPECT_NEAR(closeness_of(ranking, m.rows[i].doc_id), ref.closeness[i], 1e-9);
        }
    }
}

TEST(Topsis, ClosenessInUnitIntervalAndSorted)
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        auto ranking = topsis_rank(random_matrix(rng, 40));
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            const auto& c = ranking[i];
            EXPECT_GE(c.closeness, 0.0);
            EXPECT_LE(c.closeness, 1.0);
            EXPECT_GE(c.d_plus, 0.0);
            EXPECT_GE(c.d_minus, 0.0);
            if (c.d_plus + c.d_minus > 0) {
                EXPECT_DOUBLE_EQ(c.closeness, c.d_minus / (c.d_plus + c.d_minus));
            }
            if (i > 0) {
                const auto& p = ranking[i - 1];
                EXPECT_TRUE(p.closeness > c.closeness || (p.closeness == c.closeness && p.doc_id < c.doc_id));
            }
        }
    }
}

TEST(Topsis, OrderInvariantUnderColumnScaling)
{
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> factor(0.01, 100.0);
    std::uniform_int_distribution<std::size_t> column(0, 2);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = random_matrix(rng, 30);
        auto scaled = m;
        auto c = column(rng);
        auto f = factor(rng);
        for (auto& row : scaled.rows) {
            row.values[c] *= f;
        }
        auto a = topsis_rank(m);
        auto b = topsis_rank(scaled);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i].closeness, b[i].closeness, 1e-9);
        }
        // Exact order may only differ among closeness ties within rounding noise.
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].doc_id != b[i].doc_id) {
                EXPECT_NEAR(a[i].closeness, closeness_of(b, a[i].doc_id), 1e-9);
            }
        }
    }
}

TEST(Topsis, DominatedDocumentNeverOutranksDominator)
{
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        auto m = random_matrix(rng, 15);
        std::uniform_int_distribution<std::size_t> pick(0, m.rows.size() - 1);
        auto dominator = m.rows[pick(rng)];
        MatrixRow dominated{"zz_dominated", dominator.values};
        dominated.values[r_in] *= frac(rng);
        dominated.values[r_main] *= frac(rng);
        dominated.values[r_ex] += frac(rng) * 5 + 1e-3;
        m.rows.push_back(dominated);
        auto ranking = topsis_rank(m);
        EXPECT_LE(closeness_of(ranking, "zz_dominated"), closeness_of(ranking, dominator.doc_id) + 1e-12);
    }
}

TEST(Fuse, ProducesRunAndDiagnostics)
{
    auto dir = std::filesystem::temp_directory_path() / "trialrank_fuse_diag";
    std::filesystem::remove_all(dir);
    auto in = run_of("7", {{"A", 3.0}, {"B", 1.0}});
    auto ex = run_of("7", {{"A", 2.0}});
    auto main = run_of("7", {{"A", 4.0}, {"B", 2.0}});
    auto run = fuse_runs(in, ex, main, "tt", 1, 1000, make_criteria(), dir);
    ASSERT_EQ(run.entries.size(), 1U);
    EXPECT_EQ(run.entries[0].doc_id, "B");
    EXPECT_EQ(run.entries[0].rank, 1);
    EXPECT_NEAR(run.entries[0].score, 0.5635, 5e-5);
    EXPECT_EQ(run.run_tag, "tt");

    std::ifstream diag(dir / "topsis.7.json");
    ASSERT_TRUE(diag);
    auto j = nlohmann::json::parse(diag);
    EXPECT_EQ(j["ranking"].size(), 2U);
    EXPECT_EQ(j["positive_ideal"].size(), 3U);
    std::filesystem::remove_all(dir);

    EXPECT_TRUE(fuse_runs(run_of("x", {}), run_of("x", {}), run_of("x", {}), "tt").entries.empty());
}
