#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mini_corpus.hpp"
#include "trialrank/error.hpp"
#include "trialrank/pipeline.hpp"

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
    return ErrorCode::io_failure;
}

RunConfig config_of(const std::string& text)
{
    std::istringstream in(text);
    return parse_run_config(in);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("trialrank_pipeline_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir / name;
}

void expect_valid_run_file(const std::filesystem::path& path, std::size_t depth, std::size_t queries)
{
    auto runs = read_trec_runs(path);
    EXPECT_EQ(runs.size(), queries);
    for (const auto& [qid, run] : runs) {
        EXPECT_LE(run.entries.size(), depth);
        std::set<std::string> docs;
        for (std::size_t i = 0; i < run.entries.size(); ++i) {
            EXPECT_EQ(run.entries[i].rank, static_cast<int>(i + 1));
            EXPECT_TRUE(docs.insert(run.entries[i].doc_id).second);
            if (i > 0) {
                EXPECT_GE(run.entries[i - 1].score, run.entries[i].score);
            }
        }
    }
}

}  // namespace

TEST(RunConfigParse, ShippedConfigs)
{
    auto r1 = fixture::mini_config("r1");
    EXPECT_EQ(r1.run_name, "R1");
    EXPECT_EQ(r1.representation, QueryRepresentation::keywords);
    EXPECT_EQ(r1.model, RelevanceModel::bm25);
    EXPECT_EQ(r1.views, std::vector<View>{View::comb});
    EXPECT_DOUBLE_EQ(r1.keywords.lambda, 0.5);

    auto r2 = fixture::mini_config("r2");
    EXPECT_EQ(r2.model, RelevanceModel::tt_mw);
    EXPECT_EQ(r2.representation, QueryRepresentation::verbose);
    EXPECT_EQ(r2.pool_depth, 1000U);
    EXPECT_NEAR(r2.criteria[r_in].weight, 1.0 / 3.0, 1e-15);

    auto r3 = fixture::mini_config("r3");
    EXPECT_EQ(r3.representation, QueryRepresentation::keywords);
    EXPECT_EQ(r3.views, r2.views);

    for (const char* name : {"r4", "r5"}) {
        auto r = fixture::mini_config(name);
        EXPECT_EQ(r.model, RelevanceModel::bm25_reranker);
        EXPECT_EQ(r.views, std::vector<View>{View::comb_star});
    }
}

TEST(RunConfigParse, Rejections)
{
    EXPECT_EQ(code_of([] { (void)config_of("views = i_in, i_main\nrelevance_model = TT_MW\n"); }),
              ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("views = i_in, i_comb\nrelevance_model = BM25\n"); }),
              ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("colour = blue\n"); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("depth = 0\n"); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("bm25.k1 = fast\n"); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("depth = 5\ndepth = 6\n"); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("just words\n"); }), ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("views = i_foo\n"); }), ErrorCode::unknown_view);
    EXPECT_EQ(code_of([] {
                  (void)config_of("views = i_in,i_ex,i_main\nrelevance_model = TT_MW\nfusion.w_in = 0.33\n"
                                  "fusion.w_ex = 0.33\nfusion.w_main = 0.33\n");
              }),
              ErrorCode::invalid_config);
    EXPECT_EQ(code_of([] { (void)config_of("keywords.lambda = 2\n"); }), ErrorCode::invalid_config);

    auto ok = config_of("# comment\nrun_name = X  # trailing\nviews = i_main\ndepth = 7\n");
    EXPECT_EQ(ok.run_name, "X");
    EXPECT_EQ(ok.depth, 7U);
}

TEST(Queries, TsvAndTopicMarkupAgree)
{
    auto tsv = load_queries(fixture::mini_dir / "topics.tsv");
    auto xml = load_queries(fixture::mini_dir / "topics.xml");
    ASSERT_EQ(tsv.size(), 3U);
    ASSERT_EQ(xml.size(), 3U);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(tsv[i].query_id, xml[i].query_id);
        EXPECT_EQ(tsv[i].text, xml[i].text);
    }
    EXPECT_EQ(code_of([] { (void)parse_queries("1 no tab here\n"); }), ErrorCode::malformed_record);
    EXPECT_EQ(code_of([] { (void)parse_queries("1\ta\n1\tb\n"); }), ErrorCode::malformed_record);
    EXPECT_EQ(code_of([] { (void)parse_queries("<topics></topics>"); }), ErrorCode::malformed_record);
    EXPECT_EQ(code_of([] { (void)load_queries("/nonexistent/topics.tsv"); }), ErrorCode::io_failure);
}

TEST(Pipeline, MissingIndex)
{
    auto config = fixture::mini_config("r2");
    config.index_dir = scratch("no_such_dir");
    EXPECT_EQ(code_of([&] { (void)run_from_config(config, load_queries(fixture::mini_dir / "topics.tsv")); }),
              ErrorCode::missing_index);
    IndexSet empty;
    EXPECT_EQ(code_of([&] { (void)empty.at(View::in); }), ErrorCode::missing_index);
}

TEST(Pipeline, RunsAreValidAndDeterministic)
{
    auto queries = load_queries(fixture::mini_dir / "topics.tsv");
    for (const char* name : {"r1", "r2", "r3", "r4", "r5"}) {
        auto config = fixture::mini_config(name);
        config.output = scratch(std::string(name) + ".a.trec");
        (void)run_from_config(config, queries, 4);
        expect_valid_run_file(config.output, config.depth, queries.size());

        auto again = config;
        again.output = scratch(std::string(name) + ".b.trec");
        (void)run_from_config(again, queries, 1);
        EXPECT_EQ(slurp(config.output), slurp(again.output)) << name;
        EXPECT_FALSE(slurp(config.output).empty());
    }
}

TEST(Pipeline, DepthCapsRows)
{
    auto config = fixture::mini_config("r2");
    config.depth = 3;
    auto runs = run_pipeline(config, load_queries(fixture::mini_dir / "topics.tsv"),
                             IndexSet::load(config.index_dir, config.collection, config.views));
    for (const auto& r : runs) {
        EXPECT_LE(r.entries.size(), 3U);
    }
}

TEST(Pipeline, DominantTrialRanksFirstUnderFusion)
{
    auto queries = load_queries(fixture::mini_dir / "topics.tsv");
    auto config = fixture::mini_config("r2");
    auto indexes = IndexSet::load(config.index_dir, config.collection, config.views);
    auto runs = run_pipeline(config, queries, indexes);
    ASSERT_EQ(runs[0].query_id, "1");
    ASSERT_FALSE(runs[0].entries.empty());
    EXPECT_EQ(runs[0].entries[0].doc_id, "NCT90000001");
    EXPECT_DOUBLE_EQ(runs[0].entries[0].score, 1.0);

    // The trials that mention the note's conditions only as exclusions fall
    // behind it under fusion.
    for (const auto& e : runs[0].entries) {
        if (e.doc_id == "NCT90000002" || e.doc_id == "NCT90000003") {
            EXPECT_LT(e.score, 0.5) << e.doc_id;
        }
    }
}

TEST(Pipeline, VerboseAndKeywordRunsDifferOnlyInQueryRepresentation)
{
    auto queries = load_queries(fixture::mini_dir / "topics.tsv");
    auto r2 = fixture::mini_config("r2");
    auto r3 = fixture::mini_config("r3");
    auto embedder = make_embedder(r3.embedding);
    (void)extract_query_keywords(queries, *embedder, r3.keywords);
    auto indexes = IndexSet::load(r2.index_dir, r2.collection, r2.views);

    auto as_r3 = r2;
    as_r3.run_name = r3.run_name;
    as_r3.representation = QueryRepresentation::keywords;
    EXPECT_EQ(run_pipeline(as_r3, queries, indexes), run_pipeline(r3, queries, indexes));
    EXPECT_NE(run_pipeline(r2, queries, indexes), run_pipeline(r3, queries, indexes));
}

TEST(Pipeline, KeywordDumpIsReusedAndMatchesExtraction)
{
    auto queries = load_queries(fixture::mini_dir / "topics.tsv");
    auto config = fixture::mini_config("r1");
    config.keyword_dump = scratch("kw.jsonl");
    std::filesystem::remove(config.keyword_dump);
    config.output = scratch("r1.extract.trec");
    auto extracted = run_from_config(config, queries);
    ASSERT_TRUE(std::filesystem::exists(config.keyword_dump));

    config.embedding.provider = "none";
    config.output = scratch("r1.dump.trec");
    auto reused = run_from_config(config, queries);
    EXPECT_EQ(extracted, reused);
}

TEST(Pipeline, RerankerReordersFirstStage)
{
    auto queries = load_queries(fixture::mini_dir / "topics.tsv");
    auto config = fixture::mini_config("r4");
    auto indexes = IndexSet::load(config.index_dir, config.collection, config.views);
    auto first = run_pipeline(config, queries, indexes);

    // Scores that reverse the first-stage order.
    auto scores_path = scratch("rerank.txt");
    {
        std::ofstream out(scores_path);
        for (const auto& run : first) {
            for (const auto& e : run.entries) {
                out << run.query_id << ' ' << e.doc_id << ' ' << e.rank << '\n';
            }
        }
    }
    config.reranker_scores = scores_path;
    config.output = scratch("r4.reranked.trec");
    auto reranked = run_from_config(config, queries);
    ASSERT_EQ(reranked.size(), first.size());
    for (std::size_t q = 0; q < first.size(); ++q) {
        ASSERT_EQ(reranked[q].entries.size(), first[q].entries.size());
        auto n = first[q].entries.size();
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(reranked[q].entries[i].doc_id, first[q].entries[n - 1 - i].doc_id);
        }
    }
}
