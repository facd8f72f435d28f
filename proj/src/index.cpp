#include "trialrank/index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "trialrank/error.hpp"
#include "trialrank/parallel.hpp"

namespace trialrank {

namespace {

// File layout (all integers little-endian):
//   magic "TRIALIDX" | u32 version | u64 preamble size | JSON preamble
//   doc table:  N x (u32 id size, id bytes, u32 length)
//   dictionary: T x (u32 term size, term bytes, u32 df, df x (u32 doc, u32 tf))
//   trailer "TRIALEND"
constexpr std::array<char, 8> magic{'T', 'R', 'I', 'A', 'L', 'I', 'D', 'X'};
constexpr std::array<char, 8> trailer{'T', 'R', 'I', 'A', 'L', 'E', 'N', 'D'};

class Writer {
  public:
    explicit Writer(std::ofstream& out) : out_(out) {}

    void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

    void u32(std::uint32_t v)
    {
        std::array<char, 4> b{};
        for (std::size_t i = 0; i < 4; ++i) {
            b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
        }
        bytes(b.data(), b.size());
    }

    void u64(std::uint64_t v)
    {
        std::array<char, 8> b{};
        for (std::size_t i = 0; i < 8; ++i) {
            b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
        }
        bytes(b.data(), b.size());
    }

    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

  private:
    std::ofstream& out_;
};

class Reader {
  public:
    Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}

    void bytes(char* data, std::size_t n)
    {
        in_.read(data, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            corrupt("truncated file");
        }
    }

    std::uint32_t u32()
    {
        std::array<unsigned char, 4> b{};
        bytes(reinterpret_cast<char*>(b.data()), b.size());
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        }
        return v;
    }

    std::uint64_t u64()
    {
        std::array<unsigned char, 8> b{};
        bytes(reinterpret_cast<char*>(b.data()), b.size());
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        }
        return v;
    }

    std::string str(std::size_t limit)
    {
        auto n = u32();
        if (n > limit) {
            corrupt("string length out of range");
        }
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    [[noreturn]] void corrupt(const std::string& why) const
    {
        throw Error(ErrorCode::format_version_mismatch, path_ + ": " + why);
    }

  private:
    std::ifstream& in_;
    std::string path_;
};

}  // namespace

PostingsIndex PostingsIndex::from_terms(std::string field_name,
                                        std::span<const std::string> doc_ids,
                                        std::span<const TokenStream> doc_terms)
{
    PostingsIndex index;
    index.field_name_ = std::move(field_name);
    index.docs_.reserve(doc_ids.size());
    for (std::size_t d = 0; d < doc_ids.size(); ++d) {
        const auto& terms = doc_terms[d];
        index.docs_.push_back(DocEntry{doc_ids[d], static_cast<std::uint32_t>(terms.size())});
        std::map<std::string_view, std::uint32_t> counts;
        for (const auto& t : terms) {
            ++counts[t];
        }
        for (const auto& [term, tf] : counts) {
            index.dictionary_[std::string(term)].push_back(Posting{static_cast<DocOrdinal>(d), tf});
        }
    }
    index.finish();
    return index;
}

PostingsIndex PostingsIndex::build(std::span<const CorpusRecord> corpus,
                                   View view,
                                   const Analyzer& analyzer,
                                   unsigned threads)
{
    std::vector<std::string> ids(corpus.size());
    std::vector<TokenStream> terms(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) {
        ids[i] = corpus[i].doc_id;
        terms[i] = analyzer.analyze(corpus[i].views.get(view));
    });
    return from_terms(std::string(view_name(view)), ids, terms);
}

void PostingsIndex::finish()
{
    ordinals_.clear();
    std::uint64_t total = 0;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        ordinals_.emplace(docs_[d].doc_id, static_cast<DocOrdinal>(d));
        total += docs_[d].length;
    }
    avg_doc_len_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

std::optional<DocOrdinal> PostingsIndex::ordinal_of(std::string_view doc_id) const
{
    auto it = ordinals_.find(std::string(doc_id));
    if (it == ordinals_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const Posting> PostingsIndex::postings(std::string_view term) const
{
    auto it = dictionary_.find(std::string(term));
    if (it == dictionary_.end()) {
        return {};
    }
    return it->second;
}

std::uint32_t PostingsIndex::tf(std::string_view term, DocOrdinal doc) const
{
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, DocOrdinal d) { return p.doc < d; });
    return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

std::vector<std::string> PostingsIndex::sorted_terms() const
{
    std::vector<std::string> terms;
    terms.reserve(dictionary_.size());
    for (const auto& entry : dictionary_) {
        terms.push_back(entry.first);
    }
    std::sort(terms.begin(), terms.end());
    return terms;
}

void PostingsIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    std::uint64_t total_postings = 0;
    for (const auto& entry : dictionary_) {
        total_postings += entry.second.size();
    }
    nlohmann::ordered_json stats;
    stats["field"] = field_name_;
    stats["num_docs"] = docs_.size();
    stats["num_terms"] = dictionary_.size();
    stats["num_postings"] = total_postings;
    stats["avg_doc_len"] = avg_doc_len_;
    auto preamble = stats.dump();

    Writer w(out);
    w.bytes(magic.data(), magic.size());
    w.u32(format_version);
    w.u64(preamble.size());
    w.bytes(preamble.data(), preamble.size());
    for (const auto& doc : docs_) {
        w.str(doc.doc_id);
        w.u32(doc.length);
    }
    for (const auto& term : sorted_terms()) {
        const auto& list = dictionary_.at(term);
        w.str(term);
        w.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    w.bytes(trailer.data(), trailer.size());
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed: " + path.string());
    }
}

PostingsIndex PostingsIndex::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    }
    Reader r(in, path.string());

    std::array<char, 8> head{};
    r.bytes(head.data(), head.size());
    if (head != magic) {
        r.corrupt("bad magic");
    }
    if (auto version = r.u32(); version != format_version) {
        r.corrupt("unsupported format version " + std::to_string(version));
    }
    auto preamble_size = r.u64();
    if (preamble_size > (1U << 20)) {
        r.corrupt("preamble too large");
    }
    std::string preamble(preamble_size, '\0');
    r.bytes(preamble.data(), preamble.size());
    auto stats = nlohmann::json::parse(preamble, nullptr, false);
    if (stats.is_discarded() || !stats.is_object() || !stats.contains("field") || !stats.contains("num_docs") ||
        !stats.contains("num_terms") || !stats.contains("num_postings")) {
        r.corrupt("invalid preamble");
    }

    PostingsIndex index;
    try {
        index.field_name_ = stats.at("field").get<std::string>();
        auto num_docs = stats.at("num_docs").get<std::uint64_t>();
        auto num_terms = stats.at("num_terms").get<std::uint64_t>();
        auto num_postings = stats.at("num_postings").get<std::uint64_t>();

        constexpr std::size_t max_string = 1U << 20;
        index.docs_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(num_docs, 1U << 24)));
        for (std::uint64_t d = 0; d < num_docs; ++d) {
            auto id = r.str(max_string);
            auto length = r.u32();
            index.docs_.push_back(DocEntry{std::move(id), length});
        }
        std::uint64_t seen_postings = 0;
        for (std::uint64_t t = 0; t < num_terms; ++t) {
            auto term = r.str(max_string);
            auto df = r.u32();
            if (df == 0 || df > num_docs) {
                r.corrupt("document frequency out of range for '" + term + "'");
            }
            std::vector<Posting> list(df);
            for (auto& p : list) {
                p.doc = r.u32();
                p.tf = r.u32();
                if (p.doc >= num_docs || p.tf == 0) {
                    r.corrupt("posting out of range for '" + term + "'");
                }
            }
            for (std::size_t i = 1; i < list.size(); ++i) {
                if (list[i - 1].doc >= list[i].doc) {
                    r.corrupt("unsorted postings for '" + term + "'");
                }
            }
            seen_postings += df;
            if (!index.dictionary_.emplace(std::move(term), std::move(list)).second) {
                r.corrupt("duplicate term");
            }
        }
        if (seen_postings != num_postings) {
            r.corrupt("posting count mismatch");
        }
    } catch (const nlohmann::json::exception& e) {
        r.corrupt(std::string("invalid preamble: ") + e.what());
    }
    std::array<char, 8> tail{};
    r.bytes(tail.data(), tail.size());
    if (tail != trailer) {
        r.corrupt("bad trailer");
    }
    index.finish();
    if (index.ordinals_.size() != index.docs_.size()) {
        r.corrupt("duplicate doc_id");
    }
    return index;
}

std::filesystem::path index_path(const std::filesystem::path& dir, std::string_view collection, View view)
{
    return dir / (std::string(collection) + "." + std::string(view_name(view)) + ".idx");
}

}  // namespace trialrank
