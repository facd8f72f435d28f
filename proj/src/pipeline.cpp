#include "trialrank/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "trialrank/error.hpp"
#include "trialrank/parallel.hpp"

namespace trialrank {

namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void config_error(const std::string& where, const std::string& msg)
{
    throw Error(ErrorCode::invalid_config, where + ": " + msg);
}

double to_double(const std::string& where, const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used == value.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    config_error(where, key + " expects a number, got '" + value + "'");
}

std::size_t to_count(const std::string& where, const std::string& key, const std::string& value)
{
    double v = to_double(where, key, value);
    if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        config_error(where, key + " expects a positive integer, got '" + value + "'");
    }
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& where, const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    config_error(where, key + " expects true or false, got '" + value + "'");
}

std::vector<View> to_views(const std::string& value)
{
    std::vector<View> views;
    std::stringstream list(value);
    for (std::string item; std::getline(list, item, ',');) {
        if (auto name = trim(item); !name.empty()) {
            views.push_back(parse_view(name));
        }
    }
    return views;
}

class Stopwatch {
  public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::string_view model_name(RelevanceModel model) noexcept
{
    switch (model) {
    case RelevanceModel::bm25:
        return "BM25";
    case RelevanceModel::tt_mw:
        return "TT_MW";
    case RelevanceModel::bm25_reranker:
        return "BM25+reranker";
    }
    return "?";
}

std::string_view representation_name(QueryRepresentation rep) noexcept
{
    return rep == QueryRepresentation::verbose ? "Qd" : "Qk";
}

void RunConfig::validate() const
{
    if (run_name.empty() || run_name.find_first_of(" \t") != std::string::npos) {
        throw Error(ErrorCode::invalid_config, "run_name must be a non-empty token");
    }
    bm25.validate();
    keywords.validate();
    validate_criteria(criteria);
    if (pool_depth == 0 || depth == 0) {
        throw Error(ErrorCode::invalid_config, "pool_depth and depth must be at least 1");
    }
    std::set<View> unique(views.begin(), views.end());
    if (unique.size() != views.size()) {
        throw Error(ErrorCode::invalid_config, "views must not repeat");
    }
    if (model == RelevanceModel::tt_mw) {
        if (unique != std::set<View>{View::in, View::ex, View::main}) {
            throw Error(ErrorCode::invalid_config, "TT_MW needs exactly the views i_in, i_ex, i_main");
        }
    } else if (views.size() != 1) {
        throw Error(ErrorCode::invalid_config,
                    fmt::format("{} needs exactly one view, got {}", model_name(model), views.size()));
    }
}

RunConfig parse_run_config(std::istream& in, const std::string& source)
{
    RunConfig config;
    using Setter = std::function<void(const std::string& where, const std::string& key, const std::string& value)>;
    double w_in = 1.0 / 3.0;
    double w_ex = 1.0 / 3.0;
    double w_main = 1.0 / 3.0;
    const std::map<std::string, Setter> setters{
        {"run_name", [&](auto&, auto&, auto& v) { config.run_name = v; }},
        {"query_representation",
         [&](auto& w, auto& k, auto& v) {
             if (v == "Qd") {
                 config.representation = QueryRepresentation::verbose;
             } else if (v == "Qk") {
                 config.representation = QueryRepresentation::keywords;
             } else {
                 config_error(w, k + " must be Qd or Qk, got '" + v + "'");
             }
         }},
        {"views", [&](auto&, auto&, auto& v) { config.views = to_views(v); }},
        {"relevance_model",
         [&](auto& w, auto& k, auto& v) {
             if (v == "BM25") {
                 config.model = RelevanceModel::bm25;
             } else if (v == "TT_MW") {
                 config.model = RelevanceModel::tt_mw;
             } else if (v == "BM25+reranker") {
                 config.model = RelevanceModel::bm25_reranker;
             } else {
                 config_error(w, k + " must be BM25, TT_MW or BM25+reranker, got '" + v + "'");
             }
         }},
        {"bm25.k1", [&](auto& w, auto& k, auto& v) { config.bm25.k1 = to_double(w, k, v); }},
        {"bm25.b", [&](auto& w, auto& k, auto& v) { config.bm25.b = to_double(w, k, v); }},
        {"keywords.lambda", [&](auto& w, auto& k, auto& v) { config.keywords.lambda = to_double(w, k, v); }},
        {"keywords.budget_unit",
         [&](auto& w, auto& k, auto& v) {
             if (v == "tokens") {
                 config.keywords.unit = BudgetUnit::tokens;
             } else if (v == "phrases") {
                 config.keywords.unit = BudgetUnit::phrases;
             } else {
                 config_error(w, k + " must be tokens or phrases");
             }
         }},
        {"keywords.standardize",
         [&](auto& w, auto& k, auto& v) { config.keywords.standardize_similarities = to_bool(w, k, v); }},
        {"keywords.dump", [&](auto&, auto&, auto& v) { config.keyword_dump = v; }},
        {"fusion.w_in", [&](auto& w, auto& k, auto& v) { w_in = to_double(w, k, v); }},
        {"fusion.w_ex", [&](auto& w, auto& k, auto& v) { w_ex = to_double(w, k, v); }},
        {"fusion.w_main", [&](auto& w, auto& k, auto& v) { w_main = to_double(w, k, v); }},
        {"fusion.diagnostics", [&](auto&, auto&, auto& v) { config.diagnostics_dir = v; }},
        {"pool_depth", [&](auto& w, auto& k, auto& v) { config.pool_depth = to_count(w, k, v); }},
        {"depth", [&](auto& w, auto& k, auto& v) { config.depth = to_count(w, k, v); }},
        {"collection", [&](auto&, auto&, auto& v) { config.collection = v; }},
        {"index_dir", [&](auto&, auto&, auto& v) { config.index_dir = v; }},
        {"output", [&](auto&, auto&, auto& v) { config.output = v; }},
        {"reranker.scores", [&](auto&, auto&, auto& v) { config.reranker_scores = v; }},
        {"embedding.provider",
         [&](auto& w, auto& k, auto& v) {
             if (v != "hashed" && v != "http" && v != "none") {
                 config_error(w, k + " must be hashed, http or none");
             }
             config.embedding.provider = v;
         }},
        {"embedding.endpoint", [&](auto&, auto&, auto& v) { config.embedding.endpoint = v; }},
        {"embedding.cache", [&](auto&, auto&, auto& v) { config.embedding.cache = v; }},
        {"embedding.dim", [&](auto& w, auto& k, auto& v) { config.embedding.dim = to_count(w, k, v); }},
        {"embedding.timeout_ms",
         [&](auto& w, auto& k, auto& v) { config.embedding.timeout_ms = static_cast<unsigned>(to_count(w, k, v)); }},
    };

    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto where = fmt::format("{}:{}", source, lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        auto eq = text.find('=');
        if (eq == std::string::npos) {
            config_error(where, "expected key = value");
        }
        auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            config_error(where, "unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            config_error(where, "key '" + key + "' given twice");
        }
        it->second(where, key, value);
    }
    config.criteria = make_criteria(w_in, w_ex, w_main);
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::invalid_config, "cannot open config " + path.string());
    }
    return parse_run_config(in, path.string());
}

std::vector<Query> parse_queries(std::string_view content, const std::string& source)
{
    std::vector<Query> queries;
    std::set<std::string> seen;
    auto add = [&](std::string id, std::string text, const std::string& where) {
        if (id.empty()) {
            throw Error(ErrorCode::malformed_record, where + ": empty query id");
        }
        if (!seen.insert(id).second) {
            throw Error(ErrorCode::malformed_record, where + ": duplicate query id " + id);
        }
        queries.push_back(Query{std::move(id), std::move(text), {}});
    };

    auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && content[first] == '<') {
        static const std::regex topic(R"(<topic\b([^>]*)>([\s\S]*?)</topic\s*>)", std::regex::icase);
        static const std::regex number(R"rx(number\s*=\s*["']([^"']*)["'])rx", std::regex::icase);
        std::string text(content);
        for (auto it = std::sregex_iterator(text.begin(), text.end(), topic); it != std::sregex_iterator(); ++it) {
            std::smatch num;
            auto attrs = (*it)[1].str();
            if (!std::regex_search(attrs, num, number)) {
                throw Error(ErrorCode::malformed_record, source + ": topic without a number attribute");
            }
            add(trim(num[1].str()), strip_markup((*it)[2].str()), source);
        }
        if (queries.empty()) {
            throw Error(ErrorCode::malformed_record, source + ": no <topic> elements");
        }
        return queries;
    }

    std::size_t lineno = 0;
    std::istringstream lines{std::string(content)};
    for (std::string line; std::getline(lines, line);) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto where = fmt::format("{}:{}", source, lineno);
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorCode::malformed_record, where + ": expected query_id<TAB>text");
        }
        add(trim(std::string_view(line).substr(0, tab)), trim(std::string_view(line).substr(tab + 1)), where);
    }
    return queries;
}

std::vector<Query> load_queries(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open queries " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_queries(buffer.str(), path.string());
}

IndexSet IndexSet::load(const std::filesystem::path& dir, const std::string& collection,
                        const std::vector<View>& views)
{
    IndexSet set;
    for (auto view : views) {
        auto path = index_path(dir, collection, view);
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::missing_index, "no index for view " + std::string(view_name(view)) + " at " +
                                                      path.string() + " (run build-index first)");
        }
        set.add(view, PostingsIndex::load(path));
    }
    return set;
}

void IndexSet::add(View view, PostingsIndex index)
{
    indexes_.insert_or_assign(view, std::move(index));
}

const PostingsIndex& IndexSet::at(View view) const
{
    auto it = indexes_.find(view);
    if (it == indexes_.end()) {
        throw Error(ErrorCode::missing_index, "view " + std::string(view_name(view)) + " is not loaded");
    }
    return it->second;
}

std::vector<std::filesystem::path> build_indexes(const std::vector<CorpusRecord>& corpus,
                                                 const std::filesystem::path& dir, const std::string& collection,
                                                 const std::vector<View>& views, unsigned threads)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    Analyzer analyzer;
    for (auto view : views) {
        Stopwatch clock;
        auto index = PostingsIndex::build(corpus, view, analyzer, threads);
        auto path = index_path(dir, collection, view);
        index.save(path);
        spdlog::info("indexed {} docs, {} terms for {} in {:.2f}s", index.num_docs(), index.num_terms(),
                     view_name(view), clock.seconds());
        written.push_back(std::move(path));
    }
    return written;
}

std::shared_ptr<CachedEmbedder> make_embedder(const EmbeddingSettings& settings)
{
    std::shared_ptr<EmbeddingProvider> provider;
    std::optional<std::size_t> dim;
    if (settings.provider == "hashed") {
        provider = std::make_shared<HashedBagOfWordsProvider>(settings.dim);
        dim = settings.dim;
    } else if (settings.provider == "http") {
        auto endpoint = settings.endpoint;
        if (endpoint.empty()) {
            if (const char* env = std::getenv("TRIALRANK_EMBEDDING_URL")) {
                endpoint = env;
            }
        }
        if (endpoint.empty()) {
            throw Error(ErrorCode::invalid_config,
                        "http embeddings need embedding.endpoint or TRIALRANK_EMBEDDING_URL");
        }
        provider = std::make_shared<HttpEmbeddingProvider>(endpoint, std::chrono::milliseconds(settings.timeout_ms));
    } else if (settings.provider != "none") {
        throw Error(ErrorCode::invalid_config, "unknown embedding provider '" + settings.provider + "'");
    }
    auto cached = std::make_shared<CachedEmbedder>(provider, dim);
    if (!settings.cache.empty()) {
        cached->load(settings.cache);
    }
    return cached;
}

std::map<std::string, KeywordResult> extract_query_keywords(std::vector<Query>& queries, EmbeddingProvider& embedder,
                                                            const KeywordConfig& config, unsigned threads)
{
    Stopwatch clock;
    std::vector<KeywordResult> results(queries.size());
    parallel_for(queries.size(), threads,
                 [&](std::size_t i) { results[i] = extract_keywords(queries[i].text, embedder, config); });
    std::map<std::string, KeywordResult> by_id;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        queries[i].keyword_terms = results[i].terms;
        by_id[queries[i].query_id] = std::move(results[i]);
    }
    spdlog::info("extracted keywords for {} queries in {:.2f}s", queries.size(), clock.seconds());
    return by_id;
}

TokenStream query_terms(const Query& query, QueryRepresentation rep, const Analyzer& analyzer)
{
    if (rep == QueryRepresentation::verbose) {
        return analyzer.analyze(query.text);
    }
    std::string joined;
    for (const auto& term : query.keyword_terms) {
        joined += term;
        joined += ' ';
    }
    return analyzer.analyze(joined);
}

std::vector<ScoredRun> run_pipeline(const RunConfig& config, const std::vector<Query>& queries,
                                    const IndexSet& indexes, Reranker* reranker, unsigned threads)
{
    config.validate();
    Stopwatch clock;
    Analyzer analyzer;
    if (config.representation == QueryRepresentation::keywords) {
        for (const auto& q : queries) {
            if (q.keyword_terms.empty()) {
                throw Error(ErrorCode::invalid_config, "query " + q.query_id + " has no extracted keywords");
            }
        }
    }
    IdentityReranker identity;
    if (config.model == RelevanceModel::bm25_reranker && reranker == nullptr) {
        reranker = &identity;
    }

    std::vector<ScoredRun> runs(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) {
        const auto& q = queries[i];
        auto terms = query_terms(q, config.representation, analyzer);
        switch (config.model) {
        case RelevanceModel::bm25:
            runs[i] = search(terms, indexes.at(config.views.front()), config.depth, config.run_name, q.query_id,
                             config.bm25);
            break;
        case RelevanceModel::bm25_reranker: {
            auto first = search(terms, indexes.at(config.views.front()), config.depth, config.run_name, q.query_id,
                                config.bm25);
            runs[i] = rerank_hook(first, reranker);
            finalize_ranking(runs[i], config.depth);
            break;
        }
        case RelevanceModel::tt_mw: {
            auto per_view = [&](View v) {
                return search(terms, indexes.at(v), config.pool_depth, config.run_name, q.query_id, config.bm25);
            };
            runs[i] = fuse_runs(per_view(View::in), per_view(View::ex), per_view(View::main), config.run_name,
                                config.depth, config.pool_depth, config.criteria, config.diagnostics_dir);
            break;
        }
        }
    });
    std::size_t rows = 0;
    for (const auto& r : runs) {
        rows += r.entries.size();
    }
    spdlog::info("{}: {} {} over {} queries, {} rows in {:.2f}s", config.run_name,
                 representation_name(config.representation), model_name(config.model), queries.size(), rows,
                 clock.seconds());
    return runs;
}

std::vector<ScoredRun> run_from_config(const RunConfig& config, std::vector<Query> queries, unsigned threads)
{
    config.validate();
    auto indexes = IndexSet::load(config.index_dir, config.collection, config.views);

    if (config.representation == QueryRepresentation::keywords) {
        if (!config.keyword_dump.empty() && std::filesystem::exists(config.keyword_dump)) {
            auto dump = read_keyword_dump(config.keyword_dump);
            for (auto& q : queries) {
                auto it = dump.find(q.query_id);
                if (it == dump.end()) {
                    throw Error(ErrorCode::malformed_record,
                                "keyword dump " + config.keyword_dump.string() + " lacks query " + q.query_id);
                }
                q.keyword_terms = it->second;
            }
        } else {
            auto embedder = make_embedder(config.embedding);
            auto results = extract_query_keywords(queries, *embedder, config.keywords, threads);
            if (!config.embedding.cache.empty()) {
                embedder->save(config.embedding.cache);
            }
            if (!config.keyword_dump.empty()) {
                write_keyword_dump(config.keyword_dump, results);
            }
        }
    }

    std::unique_ptr<Reranker> reranker;
    if (config.model == RelevanceModel::bm25_reranker) {
        if (config.reranker_scores.empty()) {
            spdlog::info("no reranker scores configured; first-stage order is kept");
        } else {
            reranker = std::make_unique<ScoreListReranker>(ScoreListReranker::load(config.reranker_scores));
        }
    }
    auto runs = run_pipeline(config, queries, indexes, reranker.get(), threads);
    if (config.output.has_parent_path()) {
        std::filesystem::create_directories(config.output.parent_path());
    }
    write_trec_runs(config.output, runs);
    return runs;
}

}  // namespace trialrank
