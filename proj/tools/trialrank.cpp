#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "trialrank/corpus.hpp"
#include "trialrank/error.hpp"
#include "trialrank/eval.hpp"
#include "trialrank/fusion.hpp"
#include "trialrank/pipeline.hpp"

using namespace trialrank;

namespace {

constexpr int exit_config = 2;
constexpr int exit_data = 3;

std::vector<View> views_from(const std::vector<std::string>& names)
{
    std::vector<View> views;
    for (const auto& n : names) {
        if (n == "all") {
            return {all_views.begin(), all_views.end()};
        }
        views.push_back(parse_view(n));
    }
    return views;
}

ScoredRun single_query_run(const std::map<std::string, ScoredRun>& runs, const std::string& qid)
{
    auto it = runs.find(qid);
    return it == runs.end() ? ScoredRun{qid, "", {}} : it->second;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("trialrank"));
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

    CLI::App app{"Clinical trial retrieval: field-view BM25, keyword reduction and TOPSIS fusion"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 0;
    std::string log_level = "info";
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse trial records into field views");
    std::string ingest_input;
    std::string ingest_output;
    ingest->add_option("--input", ingest_input, "Directory of XML records or a one-record-per-line file")
        ->required();
    ingest->add_option("--output", ingest_output, "Corpus JSONL to write")->required();

    // build-index
    auto* build = app.add_subcommand("build-index", "Build one BM25 index per field view");
    std::string build_corpus_path;
    std::string build_dir;
    std::string build_collection = "trials";
    std::vector<std::string> build_views{"all"};
    build->add_option("--corpus", build_corpus_path, "Corpus JSONL from ingest")->required();
    build->add_option("--index-dir", build_dir, "Output directory")->required();
    build->add_option("--collection", build_collection, "Index file prefix");
    build->add_option("--views", build_views, "Views to index (i_comb, i_comb_star, i_in, i_ex, i_main or all)")
        ->delimiter(',');

    // extract-keywords
    auto* extract = app.add_subcommand("extract-keywords", "Reduce verbose queries to MMR keywords");
    std::string extract_queries;
    std::string extract_output;
    KeywordConfig kw;
    std::string budget_unit = "tokens";
    EmbeddingSettings embedding;
    extract->add_option("--queries", extract_queries, "Queries (TSV or topic XML)")->required();
    extract->add_option("--output", extract_output, "Keyword dump JSONL")->required();
    extract->add_option("--lambda", kw.lambda, "MMR trade-off between relevance and diversity")
        ->check(CLI::Range(0.0, 1.0));
    extract->add_option("--budget-unit", budget_unit, "tokens or phrases")
        ->check(CLI::IsMember({"tokens", "phrases"}));
    extract->add_flag("--standardize", kw.standardize_similarities, "Standardise similarities before MMR");
    extract->add_option("--embedding-provider", embedding.provider, "hashed, http or none")
        ->check(CLI::IsMember({"hashed", "http", "none"}));
    extract->add_option("--embedding-endpoint", embedding.endpoint,
                        "http://host:port/path (default $TRIALRANK_EMBEDDING_URL)");
    std::string cache_path;
    extract->add_option("--embedding-cache", cache_path, "Embedding cache JSONL, read and updated");

    // search
    auto* search_cmd = app.add_subcommand("search", "BM25 search over one view");
    std::string search_dir;
    std::string search_collection = "trials";
    std::string search_view = "i_comb";
    std::string search_queries;
    std::string search_keywords;
    std::string search_output;
    std::string search_tag = "bm25";
    std::size_t search_depth = 1000;
    Bm25Params bm25;
    search_cmd->add_option("--index-dir", search_dir, "Index directory")->required();
    search_cmd->add_option("--collection", search_collection, "Index file prefix");
    search_cmd->add_option("--view", search_view, "Field view to search");
    search_cmd->add_option("--queries", search_queries, "Queries (TSV or topic XML)")->required();
    search_cmd->add_option("--keywords", search_keywords, "Keyword dump; searches with keywords instead of text");
    search_cmd->add_option("--output", search_output, "TREC run file")->required();
    search_cmd->add_option("--tag", search_tag, "Run tag");
    search_cmd->add_option("--depth", search_depth, "Results per query")->check(CLI::PositiveNumber);
    search_cmd->add_option("--k1", bm25.k1, "BM25 k1");
    search_cmd->add_option("--b", bm25.b, "BM25 b");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "TOPSIS fusion of inclusion, exclusion and main runs");
    std::string fuse_in;
    std::string fuse_ex;
    std::string fuse_main;
    std::string fuse_output;
    std::string fuse_tag = "tt_mw";
    std::string fuse_diag;
    std::size_t fuse_pool = 1000;
    std::size_t fuse_depth = 1000;
    std::vector<double> fuse_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    fuse->add_option("--in", fuse_in, "Run over i_in (benefit)")->required();
    fuse->add_option("--ex", fuse_ex, "Run over i_ex (cost)")->required();
    fuse->add_option("--main", fuse_main, "Run over i_main (benefit)")->required();
    fuse->add_option("--output", fuse_output, "Fused TREC run file")->required();
    fuse->add_option("--tag", fuse_tag, "Run tag");
    fuse->add_option("--pool-depth", fuse_pool, "Top documents pooled from each run")->check(CLI::PositiveNumber);
    fuse->add_option("--depth", fuse_depth, "Results per query")->check(CLI::PositiveNumber);
    fuse->add_option("--weights", fuse_weights, "w_in,w_ex,w_main")->delimiter(',')->expected(3);
    fuse->add_option("--diagnostics", fuse_diag, "Directory for per-query TOPSIS dumps");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score a run against qrels");
    std::string eval_run;
    std::string eval_qrels;
    std::string eval_json;
    std::vector<std::string> eval_medians;
    EvalConfig eval_config;
    bool exp_gain = false;
    evaluate->add_option("--run", eval_run, "TREC run file")->required();
    evaluate->add_option("--qrels", eval_qrels, "TREC qrels")->required();
    evaluate->add_option("--k", eval_config.cutoff, "Cutoff for NDCG@k and P@k")->check(CLI::PositiveNumber);
    evaluate->add_option("--threshold", eval_config.relevance_threshold, "Minimum grade counted relevant")
        ->check(CLI::Range(1, 100));
    evaluate->add_flag("--exp-gain", exp_gain, "Use 2^grade - 1 gain for NDCG");
    evaluate->add_option("--median", eval_medians, "metric=path, e.g. ndcg@10=medians.txt (repeatable)");
    evaluate->add_option("--json", eval_json, "Write the report as JSON");

    // run
    auto* run = app.add_subcommand("run", "Execute a run configuration end to end");
    std::string run_config_path;
    std::string run_queries;
    std::string run_index_dir;
    std::string run_output;
    std::string run_keywords;
    run->add_option("--config", run_config_path, "Run configuration file")->required();
    run->add_option("--queries", run_queries, "Queries (TSV or topic XML)")->required();
    run->add_option("--index-dir", run_index_dir, "Overrides index_dir");
    run->add_option("--output", run_output, "Overrides output");
    run->add_option("--keywords", run_keywords, "Overrides keywords.dump");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (ingest->parsed()) {
            auto docs = load_trials(ingest_input, threads);
            auto corpus = build_corpus(docs, threads);
            write_corpus(std::filesystem::path(ingest_output), corpus);
            spdlog::info("wrote {} records to {}", corpus.size(), ingest_output);
        } else if (build->parsed()) {
            auto corpus = read_corpus(std::filesystem::path(build_corpus_path));
            (void)build_indexes(corpus, build_dir, build_collection, views_from(build_views), threads);
        } else if (extract->parsed()) {
            kw.unit = budget_unit == "tokens" ? BudgetUnit::tokens : BudgetUnit::phrases;
            kw.validate();
            embedding.cache = cache_path;
            auto queries = load_queries(extract_queries);
            auto embedder = make_embedder(embedding);
            auto results = extract_query_keywords(queries, *embedder, kw, threads);
            if (!cache_path.empty()) {
                embedder->save(cache_path);
            }
            write_keyword_dump(extract_output, results);
        } else if (search_cmd->parsed()) {
            RunConfig config;
            config.run_name = search_tag;
            config.views = {parse_view(search_view)};
            config.bm25 = bm25;
            config.depth = search_depth;
            config.collection = search_collection;
            config.index_dir = search_dir;
            config.output = search_output;
            config.representation =
                search_keywords.empty() ? QueryRepresentation::verbose : QueryRepresentation::keywords;
            config.keyword_dump = search_keywords;
            if (!search_keywords.empty() && !std::filesystem::exists(search_keywords)) {
                throw Error(ErrorCode::io_failure, "keyword dump not found: " + search_keywords);
            }
            (void)run_from_config(config, load_queries(search_queries), threads);
        } else if (fuse->parsed()) {
            auto criteria = make_criteria(fuse_weights[0], fuse_weights[1], fuse_weights[2]);
            auto in = read_trec_runs(std::filesystem::path(fuse_in));
            auto ex = read_trec_runs(std::filesystem::path(fuse_ex));
            auto main_runs = read_trec_runs(std::filesystem::path(fuse_main));
            std::set<std::string> qids;
            for (const auto* runs : {&in, &ex, &main_runs}) {
                for (const auto& [qid, _] : *runs) {
                    qids.insert(qid);
                }
            }
            std::vector<ScoredRun> fused;
            for (const auto& qid : qids) {
                fused.push_back(fuse_runs(single_query_run(in, qid), single_query_run(ex, qid),
                                          single_query_run(main_runs, qid), fuse_tag, fuse_depth, fuse_pool, criteria,
                                          fuse_diag));
            }
            write_trec_runs(fuse_output, fused);
            spdlog::info("fused {} queries into {}", fused.size(), fuse_output);
        } else if (evaluate->parsed()) {
            eval_config.gain = exp_gain ? Gain::exponential : Gain::linear;
            auto qrels = QrelSet::load(eval_qrels);
            auto runs = read_trec_runs(std::filesystem::path(eval_run));
            auto report =
                evaluate_runs(runs, qrels, eval_config, std::filesystem::path(eval_run).filename().string());
            for (const auto& spec : eval_medians) {
                auto eq = spec.find('=');
                if (eq == std::string::npos) {
                    throw Error(ErrorCode::invalid_config, "--median expects metric=path, got '" + spec + "'");
                }
                attach_median(report, spec.substr(0, eq), load_medians(spec.substr(eq + 1)));
            }
            std::cout << format_report_table(report);
            if (!eval_json.empty()) {
                std::ofstream out(eval_json, std::ios::binary | std::ios::trunc);
                if (!out) {
                    throw Error(ErrorCode::io_failure, "cannot write " + eval_json);
                }
                out << report_to_json(report) << '\n';
            }
        } else if (run->parsed()) {
            auto config = load_run_config(run_config_path);
            if (!run_index_dir.empty()) {
                config.index_dir = run_index_dir;
            }
            if (!run_output.empty()) {
                config.output = run_output;
            }
            if (!run_keywords.empty()) {
                config.keyword_dump = run_keywords;
            }
            (void)run_from_config(config, load_queries(run_queries), threads);
            spdlog::info("wrote {}", config.output.string());
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return is_config_error(e.code()) ? exit_config : exit_data;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_data;
    }
    return 0;
}
