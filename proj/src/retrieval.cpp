#include "trialrank/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "trialrank/error.hpp"

namespace trialrank {

namespace {

double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_len, double avg_len, const Bm25Params& p)
{
    auto f = static_cast<double>(tf);
    double norm = 1.0 - p.b + p.b * static_cast<double>(doc_len) / avg_len;
    return idf * f * (p.k1 + 1.0) / (f + p.k1 * norm);
}

bool ranks_before(const RunEntry& a, const RunEntry& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

}  // namespace

void Bm25Params::validate() const
{
    if (!(k1 > 0.0) || !std::isfinite(k1)) {
        throw Error(ErrorCode::invalid_config, "BM25 k1 must be > 0");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw Error(ErrorCode::invalid_config, "BM25 b must lie in [0, 1]");
    }
}

double bm25_idf(std::size_t num_docs, std::size_t df)
{
    auto n = static_cast<double>(num_docs);
    auto d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double bm25_score(std::span<const std::string> query_terms,
                  DocOrdinal doc,
                  const PostingsIndex& index,
                  const Bm25Params& params)
{
    if (doc >= index.num_docs()) {
        throw Error(ErrorCode::unknown_document, "ordinal " + std::to_string(doc));
    }
    auto doc_len = index.doc(doc).length;
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto tf = index.tf(term, doc);
        if (tf == 0) {
            continue;
        }
        score += term_weight(bm25_idf(index.num_docs(), index.df(term)), tf, doc_len, index.avg_doc_len(), params);
    }
    return score;
}

ScoredRun search(std::span<const std::string> query_terms,
                 const PostingsIndex& index,
                 std::size_t k,
                 std::string_view run_tag,
                 std::string_view query_id,
                 const Bm25Params& params)
{
    if (index.num_docs() == 0) {
        throw Error(ErrorCode::empty_index, "index '" + index.field_name() + "' has no documents");
    }
    if (k == 0) {
        throw Error(ErrorCode::invalid_config, "search depth must be >= 1");
    }
    // Term-at-a-time; each document accumulates contributions in query-term
    // order, which keeps results bit-identical to bm25_score.
    std::vector<double> accumulator(index.num_docs(), 0.0);
    std::vector<bool> touched(index.num_docs(), false);
    for (const auto& term : query_terms) {
        auto list = index.postings(term);
        if (list.empty()) {
            continue;
        }
        double idf = bm25_idf(index.num_docs(), list.size());
        for (const auto& p : list) {
            accumulator[p.doc] += term_weight(idf, p.tf, index.doc(p.doc).length, index.avg_doc_len(), params);
            touched[p.doc] = true;
        }
    }

    ScoredRun run{std::string(query_id), std::string(run_tag), {}};
    for (std::size_t d = 0; d < accumulator.size(); ++d) {
        if (touched[d] && accumulator[d] > 0.0) {
            run.entries.push_back(RunEntry{index.doc(static_cast<DocOrdinal>(d)).doc_id, accumulator[d], 0});
        }
    }
    finalize_ranking(run, k);
    return run;
}

void finalize_ranking(ScoredRun& run, std::size_t k)
{
    auto& e = run.entries;
    if (e.size() > k) {
        std::partial_sort(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(k), e.end(), ranks_before);
        e.resize(k);
    } else {
        std::sort(e.begin(), e.end(), ranks_before);
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i].rank = static_cast<int>(i + 1);
    }
}

std::vector<double> IdentityReranker::score(std::string_view, std::span<const RunEntry> entries)
{
    std::vector<double> scores;
    scores.reserve(entries.size());
    for (const auto& e : entries) {
        scores.push_back(e.score);
    }
    return scores;
}

ScoreListReranker ScoreListReranker::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::reranker_unavailable, "cannot open score list " + path.string());
    }
    std::map<std::string, std::map<std::string, double>> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string qid;
        std::string doc;
        double value = 0.0;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> doc >> value)) {
            throw Error(ErrorCode::reranker_unavailable,
                        path.string() + ":" + std::to_string(lineno) + ": expected 'query_id doc_id score'");
        }
        scores[qid][doc] = value;
    }
    return ScoreListReranker(std::move(scores));
}

std::vector<double> ScoreListReranker::score(std::string_view query_id, std::span<const RunEntry> entries)
{
    auto q = scores_.find(std::string(query_id));
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        if (q == scores_.end()) {
            throw Error(ErrorCode::reranker_unavailable, "no scores for query " + std::string(query_id));
        }
        auto d = q->second.find(e.doc_id);
        if (d == q->second.end()) {
            throw Error(ErrorCode::reranker_unavailable,
                        "no score for (" + std::string(query_id) + ", " + e.doc_id + ")");
        }
        out.push_back(d->second);
    }
    return out;
}

ScoredRun rerank_hook(const ScoredRun& run, Reranker* reranker)
{
    if (reranker == nullptr) {
        throw Error(ErrorCode::reranker_unavailable, "no reranker configured");
    }
    auto scores = reranker->score(run.query_id, run.entries);
    if (scores.size() != run.entries.size()) {
        throw Error(ErrorCode::reranker_unavailable, "reranker returned " + std::to_string(scores.size()) +
                                                         " scores for " + std::to_string(run.entries.size()) +
                                                         " documents");
    }
    std::vector<std::size_t> order(run.entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    ScoredRun out{run.query_id, run.run_tag, {}};
    out.entries.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.entries.push_back(RunEntry{run.entries[order[i]].doc_id, scores[order[i]], static_cast<int>(i + 1)});
    }
    return out;
}

void write_trec_run(std::ostream& out, const ScoredRun& run)
{
    for (const auto& e : run.entries) {
        out << fmt::format("{} Q0 {} {} {:.6f} {}\n", run.query_id, e.doc_id, e.rank, e.score, run.run_tag);
    }
}

void write_trec_runs(const std::filesystem::path& path, const std::vector<ScoredRun>& runs)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    for (const auto& run : runs) {
        write_trec_run(out, run);
    }
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed: " + path.string());
    }
}

std::map<std::string, ScoredRun> read_trec_runs(std::istream& in)
{
    std::map<std::string, ScoredRun> runs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string qid;
        if (!(fields >> qid)) {
            continue;
        }
        std::string q0;
        std::string doc;
        std::string tag;
        int rank = 0;
        double score = 0.0;
        if (!(fields >> q0 >> doc >> rank >> score >> tag)) {
            throw Error(ErrorCode::malformed_record, "run line " + std::to_string(lineno) + ": expected 6 columns");
        }
        auto& run = runs[qid];
        if (run.query_id.empty()) {
            run.query_id = qid;
            run.run_tag = tag;
        }
        run.entries.push_back(RunEntry{std::move(doc), score, rank});
    }
    for (auto& [qid, run] : runs) {
        std::stable_sort(run.entries.begin(), run.entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    }
    return runs;
}

std::map<std::string, ScoredRun> read_trec_runs(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open run file " + path.string());
    }
    return read_trec_runs(in);
}

}  // namespace trialrank
