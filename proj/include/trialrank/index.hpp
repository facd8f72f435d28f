#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trialrank/corpus.hpp"
#include "trialrank/textproc.hpp"

namespace trialrank {

using DocOrdinal = std::uint32_t;

struct Posting {
    DocOrdinal doc;
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

struct DocEntry {
    std::string doc_id;
    std::uint32_t length;

    friend bool operator==(const DocEntry&, const DocEntry&) = default;
};

/// Immutable inverted index over one field view. Postings are sorted by
/// document ordinal; ordinals follow corpus order.
class PostingsIndex {
  public:
    static constexpr std::uint32_t format_version = 1;

    PostingsIndex() = default;

    [[nodiscard]] static PostingsIndex build(std::span<const CorpusRecord> corpus,
                                             View view,
                                             const Analyzer& analyzer = Analyzer{},
                                             unsigned threads = 1);

    /// Indexes pre-analysed documents. Used by build() and by tests.
    [[nodiscard]] static PostingsIndex from_terms(std::string field_name,
                                                  std::span<const std::string> doc_ids,
                                                  std::span<const TokenStream> doc_terms);

    /// Throws Error(io_failure).
    void save(const std::filesystem::path& path) const;
    /// Throws Error(io_failure) or Error(format_version_mismatch).
    [[nodiscard]] static PostingsIndex load(const std::filesystem::path& path);

    [[nodiscard]] const std::string& field_name() const noexcept { return field_name_; }
    [[nodiscard]] std::size_t num_docs() const noexcept { return docs_.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept { return avg_doc_len_; }
    [[nodiscard]] std::size_t num_terms() const noexcept { return dictionary_.size(); }

    [[nodiscard]] const DocEntry& doc(DocOrdinal ordinal) const { return docs_.at(ordinal); }
    [[nodiscard]] const std::vector<DocEntry>& docs() const noexcept { return docs_; }
    [[nodiscard]] std::optional<DocOrdinal> ordinal_of(std::string_view doc_id) const;

    /// Empty span for unknown terms.
    [[nodiscard]] std::span<const Posting> postings(std::string_view term) const;
    [[nodiscard]] std::uint32_t df(std::string_view term) const
    {
        return static_cast<std::uint32_t>(postings(term).size());
    }
    /// Term frequency of `term` in `doc`, 0 when absent.
    [[nodiscard]] std::uint32_t tf(std::string_view term, DocOrdinal doc) const;

    /// Dictionary terms in lexicographic order.
    [[nodiscard]] std::vector<std::string> sorted_terms() const;

    friend bool operator==(const PostingsIndex& a, const PostingsIndex& b)
    {
        return a.field_name_ == b.field_name_ && a.docs_ == b.docs_ && a.dictionary_ == b.dictionary_;
    }

  private:
    void finish();

    std::string field_name_;
    std::vector<DocEntry> docs_;
    std::unordered_map<std::string, std::vector<Posting>> dictionary_;
    std::unordered_map<std::string, DocOrdinal> ordinals_;
    double avg_doc_len_ = 0.0;
};

/// <dir>/<collection>.<view>.idx
[[nodiscard]] std::filesystem::path index_path(const std::filesystem::path& dir,
                                               std::string_view collection,
                                               View view);

}  // namespace trialrank
