#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace trialrank {

using TokenStream = std::vector<std::string>;

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Empty tokens are dropped; source order is kept.
[[nodiscard]] TokenStream tokenize(std::string_view text);

class Stoplist {
  public:
    Stoplist() = default;
    explicit Stoplist(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    /// One lowercase word per line. Blank lines and surrounding whitespace are ignored.
    [[nodiscard]] static Stoplist load(const std::filesystem::path& path);
    [[nodiscard]] static Stoplist parse(std::string_view text);

    /// The bundled English list (data/stopwords.txt), compiled into the library.
    [[nodiscard]] static const Stoplist& english();

    [[nodiscard]] bool contains(std::string_view word) const
    {
        return words_.find(std::string(word)) != words_.end();
    }
    [[nodiscard]] std::size_t size() const noexcept { return words_.size(); }

  private:
    std::unordered_set<std::string> words_;
};

[[nodiscard]] TokenStream remove_stopwords(std::span<const std::string> tokens,
                                           const Stoplist& stoplist);

/// Porter (1980) suffix stripping, following the published C reference
/// implementation. Input is expected to be lowercase; words of length <= 2
/// are returned unchanged.
[[nodiscard]] std::string porter_stem(std::string_view word);

/// tokenize -> remove_stopwords -> porter_stem. Used identically for index
/// and query text.
class Analyzer {
  public:
    explicit Analyzer(const Stoplist& stoplist = Stoplist::english(), bool stem = true)
        : stoplist_(&stoplist), stem_(stem)
    {}

    [[nodiscard]] TokenStream analyze(std::string_view text) const;

  private:
    const Stoplist* stoplist_;
    bool stem_;
};

}  // namespace trialrank
