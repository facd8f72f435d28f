#pragma once

// Exhaustive BM25 computed straight from token lists, without any index.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct RefDoc {
    std::string id;
    std::vector<std::string> tokens;
};

inline double bm25_exhaustive(const std::vector<RefDoc>& docs,
                              std::size_t which,
                              const std::vector<std::string>& query,
                              double k1,
                              double b)
{
    const double n = static_cast<double>(docs.size());
    double total_len = 0;
    for (const auto& d : docs) {
        total_len += static_cast<double>(d.tokens.size());
    }
    const double avgdl = total_len / n;
    const auto& doc = docs[which];
    const double dl = static_cast<double>(doc.tokens.size());
    double score = 0;
    for (const auto& q : query) {
        double tf = static_cast<double>(std::count(doc.tokens.begin(), doc.tokens.end(), q));
        if (tf == 0) {
            continue;
        }
        double df = 0;
        for (const auto& d : docs) {
            if (std::find(d.tokens.begin(), d.tokens.end(), q) != d.tokens.end()) {
                df += 1;
            }
        }
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        double k = k1 * ((1 - b) + b * (dl / avgdl));
        score += idf * (tf * (k1 + 1)) / (tf + k);
    }
    return score;
}

/// (doc_id, score) for every positive-scoring document, best first, ties by id.
inline std::vector<std::pair<std::string, double>> rank_exhaustive(const std::vector<RefDoc>& docs,
                                                                   const std::vector<std::string>& query,
                                                                   double k1,
                                                                   double b)
{
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double s = bm25_exhaustive(docs, i, query, k1, b);
        if (s > 0) {
            out.emplace_back(docs[i].id, s);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    return out;
}

}  // namespace oracle
