#include "trialrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "trialrank/error.hpp"

namespace trialrank {

namespace {

double gain_of(int grade, Gain gain)
{
    if (grade <= 0) {
        return 0.0;
    }
    return gain == Gain::linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

const std::map<std::string, int> no_judgments;

}  // namespace

QrelSet QrelSet::parse(std::istream& in, const std::string& source)
{
    QrelSet qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string f; fields >> f;) {
            cols.push_back(std::move(f));
        }
        if (cols.empty()) {
            continue;
        }
        auto where = fmt::format("{}:{}", source, lineno);
        if (cols.size() != 4) {
            throw Error(ErrorCode::malformed_qrels, fmt::format("{}: expected 4 columns, got {}", where, cols.size()));
        }
        int grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stoi(cols[3], &used);
            if (used != cols[3].size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw Error(ErrorCode::malformed_qrels, fmt::format("{}: grade '{}' is not an integer", where, cols[3]));
        }
        if (grade < 0) {
            throw Error(ErrorCode::malformed_qrels, fmt::format("{}: negative grade {}", where, grade));
        }
        auto& slot = qrels.judgments_[cols[0]];
        auto [it, inserted] = slot.emplace(cols[2], grade);
        if (!inserted && it->second != grade) {
            throw Error(ErrorCode::malformed_qrels, fmt::format("{}: ({}, {}) judged {} and {}", where, cols[0],
                                                                cols[2], it->second, grade));
        }
        qrels.size_ += inserted ? 1 : 0;
    }
    if (qrels.empty()) {
        spdlog::warn("{}: no judgments", source);
    }
    return qrels;
}

QrelSet QrelSet::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open qrels " + path.string());
    }
    return parse(in, path.string());
}

void QrelSet::add(const std::string& query_id, const std::string& doc_id, int grade)
{
    auto [it, inserted] = judgments_[query_id].insert_or_assign(doc_id, grade);
    size_ += inserted ? 1 : 0;
}

int QrelSet::grade(const std::string& query_id, const std::string& doc_id) const
{
    auto q = judgments_.find(query_id);
    if (q == judgments_.end()) {
        return 0;
    }
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& QrelSet::judged(const std::string& query_id) const
{
    auto q = judgments_.find(query_id);
    return q == judgments_.end() ? no_judgments : q->second;
}

std::vector<std::string> QrelSet::queries() const
{
    std::vector<std::string> ids;
    ids.reserve(judgments_.size());
    for (const auto& [qid, _] : judgments_) {
        ids.push_back(qid);
    }
    return ids;
}

std::size_t QrelSet::size() const noexcept
{
    return size_;
}

double ndcg_at_k(const ScoredRun& run, const QrelSet& qrels, std::size_t k, Gain gain)
{
    if (k == 0) {
        throw Error(ErrorCode::invalid_config, "k must be at least 1");
    }
    std::vector<int> ideal;
    for (const auto& [_, g] : qrels.judged(run.query_id)) {
        ideal.push_back(g);
    }
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
    }
    if (idcg <= 0.0) {
        return 0.0;
    }
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
        dcg += gain_of(qrels.grade(run.query_id, run.entries[i].doc_id), gain) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

double prec_at_k(const ScoredRun& run, const QrelSet& qrels, std::size_t k, int threshold)
{
    if (k == 0) {
        throw Error(ErrorCode::invalid_config, "k must be at least 1");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, run.entries.size()); ++i) {
        hits += qrels.grade(run.query_id, run.entries[i].doc_id) >= threshold ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double reciprocal_rank(const ScoredRun& run, const QrelSet& qrels, int threshold)
{
    for (std::size_t i = 0; i < run.entries.size(); ++i) {
        if (qrels.grade(run.query_id, run.entries[i].doc_id) >= threshold) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

std::map<std::string, double> parse_medians(std::istream& in, const std::string& source)
{
    std::map<std::string, double> medians;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string qid;
        std::string value;
        std::string extra;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> value) || (fields >> extra)) {
            throw Error(ErrorCode::io_failure, fmt::format("{}:{}: expected `query_id value`", source, lineno));
        }
        try {
            medians[qid] = std::stod(value);
        } catch (const std::exception&) {
            throw Error(ErrorCode::io_failure, fmt::format("{}:{}: bad value '{}'", source, lineno, value));
        }
    }
    return medians;
}

std::map<std::string, double> load_medians(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open median file " + path.string());
    }
    return parse_medians(in, path.string());
}

MedianComparison compare_to_median(const std::map<std::string, double>& values,
                                   const std::map<std::string, double>& medians)
{
    MedianComparison cmp;
    cmp.total = medians.size();
    for (const auto& [qid, v] : values) {
        auto it = medians.find(qid);
        if (it == medians.end()) {
            spdlog::warn("{}: no median value for query {}; excluded", error_code_name(ErrorCode::missing_median_entry),
                         qid);
            cmp.missing.push_back(qid);
            continue;
        }
        cmp.improved += v > it->second ? 1 : 0;
    }
    cmp.fraction = cmp.total == 0 ? 0.0 : static_cast<double>(cmp.improved) / static_cast<double>(cmp.total);
    return cmp;
}

std::vector<std::string> metric_names(const EvalReport& report)
{
    return {fmt::format("ndcg@{}", report.cutoff), "ndcg@5", fmt::format("p@{}", report.cutoff), "rr"};
}

double metric_value(const EvalReport& report, const QueryMetrics& m, const std::string& name)
{
    auto names = metric_names(report);
    const double values[] = {m.ndcg_k, m.ndcg5, m.p_k, m.rr};
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return values[i];
        }
    }
    throw Error(ErrorCode::invalid_config,
                fmt::format("unknown metric '{}' (expected one of {})", name, fmt::join(names, ", ")));
}

EvalReport evaluate_runs(const std::map<std::string, ScoredRun>& runs, const QrelSet& qrels,
                         const EvalConfig& config, const std::string& run_name)
{
    EvalReport report;
    report.run_name = run_name;
    report.cutoff = config.cutoff;
    for (const auto& qid : qrels.queries()) {
        auto it = runs.find(qid);
        ScoredRun run = it == runs.end() ? ScoredRun{qid, run_name, {}} : it->second;
        QueryMetrics m{qid,
                       ndcg_at_k(run, qrels, config.cutoff, config.gain),
                       ndcg_at_k(run, qrels, 5, config.gain),
                       prec_at_k(run, qrels, config.cutoff, config.relevance_threshold),
                       reciprocal_rank(run, qrels, config.relevance_threshold)};
        report.per_query.push_back(m);
    }
    for (const auto& [qid, _] : runs) {
        if (qrels.judged(qid).empty()) {
            spdlog::warn("query {} has no judgments and is not evaluated", qid);
        }
    }
    report.mean.query_id = "all";
    if (!report.per_query.empty()) {
        auto n = static_cast<double>(report.per_query.size());
        for (const auto& m : report.per_query) {
            report.mean.ndcg_k += m.ndcg_k / n;
            report.mean.ndcg5 += m.ndcg5 / n;
            report.mean.p_k += m.p_k / n;
            report.mean.rr += m.rr / n;
        }
    }
    return report;
}

void attach_median(EvalReport& report, const std::string& metric, const std::map<std::string, double>& medians)
{
    std::map<std::string, double> values;
    for (const auto& m : report.per_query) {
        values[m.query_id] = metric_value(report, m, metric);
    }
    report.vs_median[metric] = compare_to_median(values, medians);
}

std::string format_report_table(const EvalReport& report)
{
    std::string out;
    if (!report.run_name.empty()) {
        out += fmt::format("run: {}\n", report.run_name);
    }
    out += fmt::format("{:<12} {:>8} {:>8} {:>8} {:>8}\n", "query", fmt::format("NDCG@{}", report.cutoff), "NDCG@5",
                       fmt::format("P@{}", report.cutoff), "RR");
    auto row = [&out](const QueryMetrics& m) {
        out += fmt::format("{:<12} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", m.query_id, m.ndcg_k, m.ndcg5, m.p_k, m.rr);
    };
    for (const auto& m : report.per_query) {
        row(m);
    }
    row(report.mean);
    for (const auto& [metric, cmp] : report.vs_median) {
        out += fmt::format("improved over median {:<8} {:>3}/{:<3} ({:.1f}%)\n", metric, cmp.improved, cmp.total,
                           100.0 * cmp.fraction);
    }
    return out;
}

std::string report_to_json(const EvalReport& report)
{
    auto names = metric_names(report);
    auto metrics = [&names](const QueryMetrics& m) {
        return nlohmann::ordered_json{{names[0], m.ndcg_k}, {names[1], m.ndcg5}, {names[2], m.p_k}, {names[3], m.rr}};
    };
    nlohmann::ordered_json doc;
    doc["run"] = report.run_name;
    doc["queries"] = report.per_query.size();
    doc["mean"] = metrics(report.mean);
    auto& per = doc["per_query"] = nlohmann::ordered_json::object();
    for (const auto& m : report.per_query) {
        per[m.query_id] = metrics(m);
    }
    auto& med = doc["vs_median"] = nlohmann::ordered_json::object();
    for (const auto& [metric, cmp] : report.vs_median) {
        med[metric] = {{"improved", cmp.improved}, {"total", cmp.total}, {"fraction", cmp.fraction},
                       {"missing", cmp.missing}};
    }
    return doc.dump(2);
}

}  // namespace trialrank
