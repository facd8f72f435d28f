#include "trialrank/keywords.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trialrank/error.hpp"

namespace trialrank {

namespace {

// 0.5 + (x / max - mean) / std over the given values; NaN marks excluded cells.
void standardize(std::vector<double>& values)
{
    double max_value = -std::numeric_limits<double>::infinity();
    std::size_t n = 0;
    for (double v : values) {
        if (!std::isnan(v)) {
            max_value = std::max(max_value, v);
            ++n;
        }
    }
    if (n == 0) {
        return;
    }
    if (max_value != 0.0) {
        for (double& v : values) {
            v /= max_value;
        }
    }
    double mean = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) {
            mean += v;
        }
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) {
            var += (v - mean) * (v - mean);
        }
    }
    double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : values) {
        if (!std::isnan(v)) {
            v = sd > 0.0 ? 0.5 + (v - mean) / sd : 0.5;
        }
    }
}

std::size_t phrase_cost(const CandidatePhrase& c, BudgetUnit unit)
{
    return unit == BudgetUnit::tokens ? c.token_count : 1;
}

}  // namespace

void KeywordConfig::validate() const
{
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw Error(ErrorCode::invalid_config, "lambda must lie in [0, 1]");
    }
}

std::size_t keyword_budget(std::size_t filtered_query_length) noexcept
{
    return (filtered_query_length + 1) / 2;
}

std::vector<CandidatePhrase> generate_candidates(std::string_view query_text,
                                                 EmbeddingProvider& embedder,
                                                 const Stoplist& stoplist)
{
    auto tokens = remove_stopwords(tokenize(query_text), stoplist);
    if (tokens.empty()) {
        throw Error(ErrorCode::empty_query, "no candidate keywords survive stopword removal");
    }
    std::vector<CandidatePhrase> candidates;
    std::set<std::string> seen;
    for (const auto& t : tokens) {
        if (seen.insert(t).second) {
            candidates.push_back(CandidatePhrase{t, 1, {}});
        }
    }
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        auto bigram = tokens[i] + " " + tokens[i + 1];
        if (seen.insert(bigram).second) {
            candidates.push_back(CandidatePhrase{std::move(bigram), 2, {}});
        }
    }
    for (auto& c : candidates) {
        c.vector = embedder.embed(c.surface);
    }
    return candidates;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b)
{
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "cosine of dim " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::zero_vector, "cosine similarity of an all-zero vector");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<std::string> mmr_select(const EmbeddingVector& query_vec,
                                    std::span<const CandidatePhrase> candidates,
                                    const KeywordConfig& config,
                                    std::size_t budget)
{
    config.validate();
    if (candidates.empty()) {
        throw Error(ErrorCode::empty_query, "no candidate phrases");
    }
    const std::size_t n = candidates.size();
    std::vector<double> relevance(n);
    for (std::size_t i = 0; i < n; ++i) {
        relevance[i] = cosine_similarity(candidates[i].vector, query_vec);
    }
    // pairwise[j * n + i] = sim(candidate i, selected candidate j); diagonal unused.
    std::vector<double> pairwise(n * n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = cosine_similarity(candidates[i].vector, candidates[j].vector);
            pairwise[j * n + i] = s;
            pairwise[i * n + j] = s;
        }
    }
    std::vector<double> weighted_relevance = relevance;
    if (config.standardize_similarities) {
        standardize(weighted_relevance);
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<double> column(pairwise.begin() + static_cast<std::ptrdiff_t>(j * n),
                                       pairwise.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
            standardize(column);
            std::copy(column.begin(), column.end(), pairwise.begin() + static_cast<std::ptrdiff_t>(j * n));
        }
    }

    std::vector<bool> chosen(n, false);
    std::vector<std::size_t> selected;
    std::size_t spent = 0;
    while (spent < budget && selected.size() < n) {
        std::size_t best = n;
        double best_score = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) {
                continue;
            }
            double score = 0.0;
            if (selected.empty()) {
                score = relevance[i];
            } else {
                double redundancy = -std::numeric_limits<double>::infinity();
                for (auto s : selected) {
                    redundancy = std::max(redundancy, pairwise[s * n + i]);
                }
                score = config.lambda * weighted_relevance[i] - (1.0 - config.lambda) * redundancy;
            }
            if (best == n || score > best_score ||
                (score == best_score && candidates[i].surface < candidates[best].surface)) {
                best = i;
                best_score = score;
            }
        }
        chosen[best] = true;
        selected.push_back(best);
        spent += phrase_cost(candidates[best], config.unit);
    }

    std::vector<std::string> surfaces;
    surfaces.reserve(selected.size());
    for (auto i : selected) {
        surfaces.push_back(candidates[i].surface);
    }
    return surfaces;
}

std::vector<std::string> flatten_keywords(std::span<const std::string> phrases)
{
    std::vector<std::string> terms;
    std::set<std::string> seen;
    for (const auto& phrase : phrases) {
        std::istringstream words(phrase);
        std::string w;
        while (words >> w) {
            if (seen.insert(w).second) {
                terms.push_back(w);
            }
        }
    }
    return terms;
}

KeywordResult extract_keywords(std::string_view query_text,
                               EmbeddingProvider& embedder,
                               const KeywordConfig& config,
                               const Stoplist& stoplist)
{
    auto filtered = remove_stopwords(tokenize(query_text), stoplist);
    auto candidates = generate_candidates(query_text, embedder, stoplist);
    auto query_vec = embedder.embed(query_text);

    KeywordResult result;
    result.budget = keyword_budget(filtered.size());
    result.phrases = mmr_select(query_vec, candidates, config, result.budget);
    result.terms = flatten_keywords(result.phrases);
    return result;
}

void write_keyword_dump(const std::filesystem::path& path, const std::map<std::string, KeywordResult>& results)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    for (const auto& [qid, r] : results) {
        nlohmann::ordered_json row;
        row["query_id"] = qid;
        row["terms"] = r.terms;
        row["phrases"] = r.phrases;
        out << row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed: " + path.string());
    }
}

std::map<std::string, std::vector<std::string>> read_keyword_dump(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open keyword dump " + path.string());
    }
    std::map<std::string, std::vector<std::string>> terms;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto row = nlohmann::json::parse(line, nullptr, false);
        try {
            if (row.is_discarded()) {
                throw std::runtime_error("invalid JSON");
            }
            terms[row.at("query_id").get<std::string>()] = row.at("terms").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
            throw Error(ErrorCode::io_failure, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return terms;
}

}  // namespace trialrank
