// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles/bm25_reference.hpp"
#include "oracles/topsis_reference.hpp"
#include "trialrank/eval.hpp"
#include "trialrank/fusion.hpp"
#include "trialrank/keywords.hpp"
#include "trialrank/pipeline.hpp"
#include "trialrank/textproc.hpp"

using namespace trialrank;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = TRIALRANK_TEST_DATA_DIR;
const fs::path source_dir = TRIALRANK_SOURCE_DIR;

// Collects the first failure message of a criterion.
class Check {
  public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && failure_.empty()) {
            failure_ = what;
        }
    }
    void near(double got, double want, double tol, const std::string& what)
    {
        expect(std::abs(got - want) <= tol, fmt::format("{}: got {:.12g}, want {:.12g} +- {:g}", what, got, want, tol));
    }
    [[nodiscard]] const std::string& failure() const { return failure_; }

  private:
    std::string failure_;
};

struct AcceptanceCriterion {
    std::string name;
    double limit_seconds;
    std::function<void(Check&)> body;
};

DecisionMatrix random_matrix(std::mt19937& rng, std::size_t max_docs)
{
    std::uniform_int_distribution<std::size_t> count(1, max_docs);
    std::uniform_real_distribution<double> score(0.0, 25.0);
    std::bernoulli_distribution zero(0.15);
    DecisionMatrix m;
    m.query_id = "q";
    for (std::size_t i = 0, n = count(rng); i < n; ++i) {
        MatrixRow row{fmt::format("d{:02}", i), {}};
        for (auto& v : row.values) {
            v = zero(rng) ? 0.0 : score(rng);
        }
        m.rows.push_back(row);
    }
    return m;
}

double closeness_of(const std::vector<Closeness>& ranking, const std::string& doc)
{
    for (const auto& c : ranking) {
        if (c.doc_id == doc) {
            return c.closeness;
        }
    }
    return -1.0;
}

void topsis_oracle(Check& check)
{
    std::mt19937 rng(500);
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
            check.near(closeness_of(ranking, m.rows[i].doc_id), ref.closeness[i], 1e-9,
                       fmt::format("matrix {} doc {}", trial, m.rows[i].doc_id));
        }
    }
    DecisionMatrix pair;
    pair.rows = {MatrixRow{"A", {3, 2, 4}}, MatrixRow{"B", {1, 0, 2}}};
    auto ranking = topsis_rank(pair);
    check.near(closeness_of(ranking, "A"), 0.4365, 5e-5, "closeness(A)");
    check.near(closeness_of(ranking, "B"), 0.5635, 5e-5, "closeness(B)");
    check.expect(ranking.front().doc_id == "B", "B must rank first");
}

void topsis_scale_invariance(Check& check)
{
    std::mt19937 rng(200);
    std::uniform_real_distribution<double> factor(0.001, 1000.0);
    std::uniform_int_distribution<std::size_t> column(0, num_criteria - 1);
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
        std::vector<std::string> order_a;
        std::vector<std::string> order_b;
        for (std::size_t i = 0; i < a.size(); ++i) {
            order_a.push_back(a[i].doc_id);
            order_b.push_back(b[i].doc_id);
        }
        check.expect(order_a == order_b, fmt::format("matrix {}: order changed after scaling column {} by {}",
                                                     trial, c, f));
    }
}

void bm25_brute_force(Check& check)
{
    std::mt19937 rng(50);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g"};
    std::uniform_int_distribution<std::size_t> ndocs(1, 50);
    std::uniform_int_distribution<std::size_t> len(0, 20);
    std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
    std::uniform_int_distribution<std::size_t> qlen(1, 6);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<oracle::RefDoc> docs;
        std::vector<std::string> ids;
        std::vector<TokenStream> terms;
        for (std::size_t d = 0, n = ndocs(rng); d < n; ++d) {
            oracle::RefDoc doc{fmt::format("D{:03}", d), {}};
            for (auto l = len(rng); l > 0; --l) {
                doc.tokens.push_back(vocab[word(rng)]);
            }
            ids.push_back(doc.id);
            terms.push_back(doc.tokens);
            docs.push_back(std::move(doc));
        }
        std::vector<std::string> query;
        for (auto l = qlen(rng); l > 0; --l) {
            query.push_back(vocab[word(rng)]);
        }
        auto index = PostingsIndex::from_terms("i_main", ids, terms);
        auto expected = oracle::rank_exhaustive(docs, query, 1.2, 0.75);
        std::map<std::string, double> oracle_score(expected.begin(), expected.end());
        auto run = search(query, index, 1000, "t", "q");
        check.expect(run.entries.size() == expected.size(), fmt::format("corpus {}: result count", trial));
        for (std::size_t i = 0; i < std::min(run.entries.size(), expected.size()); ++i) {
            // Same score sequence, and each returned doc carries its oracle score.
            check.near(run.entries[i].score, expected[i].second, 1e-9, fmt::format("corpus {} rank {}", trial, i + 1));
            auto it = oracle_score.find(run.entries[i].doc_id);
            check.expect(it != oracle_score.end(), fmt::format("corpus {}: unexpected doc", trial));
            if (it != oracle_score.end()) {
                check.near(run.entries[i].score, it->second, 1e-9, fmt::format("corpus {} doc score", trial));
            }
        }
    }
    auto index = PostingsIndex::from_terms("i_main", std::vector<std::string>{"A", "B"},
                                           std::vector<TokenStream>{{"aspirin"}, {"heart"}});
    auto run = search(std::vector<std::string>{"aspirin"}, index, 10, "t", "q");
    check.expect(run.entries.size() == 1 && run.entries[0].doc_id == "A", "single-term fixture hit");
    if (!run.entries.empty()) {
        check.near(run.entries[0].score, std::log(2.0), 1e-12, "single-term score");
        check.near(run.entries[0].score, 0.6931, 5e-5, "single-term score (4 dp)");
    }
}

EmbeddingVector random_vector(std::mt19937& rng, std::size_t dim)
{
    std::normal_distribution<double> g;
    EmbeddingVector v{std::vector<double>(dim)};
    for (auto& x : v.values) {
        x = g(rng);
    }
    return v;
}

void mmr(Check& check)
{
    std::mt19937 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 15;
        auto q = random_vector(rng, 16);
        std::vector<CandidatePhrase> c;
        for (std::size_t i = 0; i < n; ++i) {
            c.push_back(CandidatePhrase{fmt::format("c{:02}", i), 1, random_vector(rng, 16)});
        }
        std::size_t budget = 1 + rng() % (n + 1);
        auto picked = mmr_select(q, c, KeywordConfig{1.0}, budget);
        auto sorted = c;
        std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
            return cosine_similarity(a.vector, q) > cosine_similarity(b.vector, q);
        });
        std::vector<std::string> expected;
        for (std::size_t i = 0; i < std::min(budget, n); ++i) {
            expected.push_back(sorted[i].surface);
        }
        check.expect(picked == expected, fmt::format("lambda=1 trial {} differs from similarity sort", trial));
    }

    double c2y = std::sqrt(1 - 0.95 * 0.95);
    double qy = (0.85 - 0.95 * 0.9) / c2y;
    double qw = std::sqrt(1 - 0.9 * 0.9 - qy * qy - 0.3 * 0.3);
    EmbeddingVector q{{0.9, qy, 0.3, qw}};
    std::vector<CandidatePhrase> hand{CandidatePhrase{"1", 1, {{1, 0, 0, 0}}},
                                      CandidatePhrase{"2", 1, {{0.95, c2y, 0, 0}}},
                                      CandidatePhrase{"3", 1, {{0, 0, 1, 0}}}};
    auto picked = mmr_select(q, hand, KeywordConfig{0.5}, 2);
    check.expect(picked == std::vector<std::string>{"1", "3"}, "hand example must select {1, 3}");

    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 1 + rng() % 12;
        auto qv = random_vector(rng, 8);
        std::vector<CandidatePhrase> c;
        std::size_t available = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t tokens = 1 + rng() % 2;
            available += tokens;
            c.push_back(CandidatePhrase{fmt::format("p{:02}", i), tokens, random_vector(rng, 8)});
        }
        std::size_t budget = 1 + rng() % (available + 1);
        KeywordConfig config{std::uniform_real_distribution<double>(0, 1)(rng)};
        auto sel = mmr_select(qv, c, config, budget);
        std::size_t spent = 0;
        std::size_t last = 0;
        std::set<std::string> unique;
        for (const auto& s : sel) {
            unique.insert(s);
            auto it = std::find_if(c.begin(), c.end(), [&](const auto& x) { return x.surface == s; });
            spent += it->token_count;
            last = it->token_count;
        }
        check.expect(unique.size() == sel.size(), fmt::format("budget trial {}: duplicate selection", trial));
        if (budget <= available) {
            check.expect(spent >= budget && spent - last < budget,
                         fmt::format("budget trial {}: spent {} for budget {}", trial, spent, budget));
        } else {
            check.expect(sel.size() == n, fmt::format("budget trial {}: should take every candidate", trial));
        }
    }
}

void metric_parity(Check& check)
{
    auto qrels = QrelSet::load(data_dir / "trec_eval" / "qrels.txt");
    auto runs = read_trec_runs(data_dir / "trec_eval" / "run.txt");
    std::ifstream expected(data_dir / "trec_eval" / "expected.tsv");
    std::string qid;
    std::string measure;
    double value = 0;
    int compared = 0;
    while (expected >> qid >> measure >> value) {
        const auto& run = runs.at(qid);
        double got = -1;
        if (measure == "ndcg_cut_10") {
            got = ndcg_at_k(run, qrels, 10);
        } else if (measure == "P_10") {
            got = prec_at_k(run, qrels, 10);
        } else if (measure == "recip_rank") {
            got = reciprocal_rank(run, qrels);
        } else {
            continue;
        }
        check.near(got, value, 1e-6, qid + " " + measure);
        ++compared;
    }
    check.expect(compared == 9, fmt::format("compared {} fixture values, want 9", compared));

    QrelSet single;
    single.add("1", "R", 2);
    ScoredRun run{"1", "t", {RunEntry{"X", 2.0, 1}, RunEntry{"R", 1.0, 2}}};
    check.near(ndcg_at_k(run, single, 10), 0.6309, 5e-5, "rank-2 NDCG");
}

void porter(Check& check)
{
    std::ifstream in(data_dir / "porter_vocab.tsv");
    std::string line;
    int pairs = 0;
    while (std::getline(in, line)) {
        auto tab = line.find('\t');
        auto word = line.substr(0, tab);
        auto stem = line.substr(tab + 1);
        check.expect(porter_stem(word) == stem, fmt::format("{} -> {}, want {}", word, porter_stem(word), stem));
        ++pairs;
    }
    check.expect(pairs == 200, fmt::format("fixture has {} pairs, want 200", pairs));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void end_to_end(Check& check)
{
    auto work = fs::temp_directory_path() / fmt::format("trialrank_acceptance_{}", ::getpid());
    fs::remove_all(work);
    auto mini = data_dir / "mini";
    auto corpus = build_corpus(load_trials(mini / "trials", 0), 0);
    check.expect(corpus.size() == 20, fmt::format("mini corpus has {} trials", corpus.size()));
    std::vector<View> views(all_views.begin(), all_views.end());
    (void)build_indexes(corpus, work / "idx", "mini", views, 0);
    auto queries = load_queries(mini / "topics.tsv");
    check.expect(queries.size() == 3, "three admission notes");

    for (const char* name : {"r1", "r2", "r3"}) {
        auto config = load_run_config(source_dir / "configs" / (std::string(name) + ".cfg"));
        config.index_dir = work / "idx";
        config.collection = "mini";
        config.output = work / (std::string(name) + ".a.trec");
        auto runs = run_from_config(config, queries, 0);
        auto again = config;
        again.output = work / (std::string(name) + ".b.trec");
        (void)run_from_config(again, queries, 1);
        check.expect(slurp(config.output) == slurp(again.output), std::string(name) + " is not deterministic");

        auto parsed = read_trec_runs(config.output);
        check.expect(parsed.size() == queries.size(), std::string(name) + ": missing queries in run file");
        for (const auto& [qid, run] : parsed) {
            check.expect(!run.entries.empty() && run.entries.size() <= 1000, std::string(name) + ": row count");
            for (std::size_t i = 0; i < run.entries.size(); ++i) {
                check.expect(run.entries[i].rank == static_cast<int>(i + 1), std::string(name) + ": ranks");
            }
        }
        if (config.model == RelevanceModel::tt_mw) {
            const auto& top = parsed.at("1").entries.front();
            check.expect(top.doc_id == "NCT90000001",
                         fmt::format("{}: dominant trial not first (got {})", name, top.doc_id));
            check.near(top.score, 1.0, 1e-12, std::string(name) + ": dominant closeness");
        }
    }

    // Index round trip: every score from a reloaded index equals the in-memory one.
    Analyzer analyzer;
    for (auto view : views) {
        auto built = PostingsIndex::build(corpus, view, analyzer, 2);
        auto loaded = PostingsIndex::load(index_path(work / "idx", "mini", view));
        check.expect(built == loaded, fmt::format("{} index differs after reload", view_name(view)));
        for (const auto& q : queries) {
            auto terms = analyzer.analyze(q.text);
            for (DocOrdinal d = 0; d < built.num_docs(); ++d) {
                check.expect(bm25_score(terms, d, built) == bm25_score(terms, d, loaded),
                             fmt::format("{} score drift for doc {}", view_name(view), d));
            }
        }
    }
    fs::remove_all(work);
}

}  // namespace

int main()
{
    spdlog::set_level(spdlog::level::warn);
    const std::vector<AcceptanceCriterion> criteria{
        {"TOPSIS oracle equivalence (500 matrices, 1e-9) and hand pair 0.4365/0.5635", 5.0, topsis_oracle},
        {"TOPSIS order invariant under positive column scaling (200 matrices)", 5.0, topsis_scale_invariance},
        {"BM25 search equals exhaustive scoring; single-term fixture = ln 2", 10.0, bm25_brute_force},
        {"MMR: lambda=1 is similarity sort, hand example selects {1,3}, budget property", 5.0, mmr},
        {"Metric parity with trec_eval fixture (1e-6); rank-2 NDCG = 0.6309", 1.0, metric_parity},
        {"Porter stemmer matches 200-pair reference fixture", 1.0, porter},
        {"End-to-end R1/R2/R3 on mini corpus: valid, deterministic, dominant first, index round trip", 30.0,
         end_to_end},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            c.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        check.expect(seconds < c.limit_seconds,
                     fmt::format("took {:.3f}s, limit {:.0f}s", seconds, c.limit_seconds));
        bool ok = check.failure().empty();
        failures += ok ? 0 : 1;
        fmt::print("{} {} [{:.3f}s < {:.0f}s]{}\n", ok ? "PASS" : "FAIL", c.name, seconds, c.limit_seconds,
                   ok ? "" : " -- " + check.failure());
    }
    return failures == 0 ? 0 : 1;
}
