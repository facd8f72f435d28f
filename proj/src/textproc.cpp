#include "trialrank/textproc.hpp"

#include <fstream>
#include <sstream>

#include "trialrank/error.hpp"

namespace trialrank {

namespace detail {
// Generated from data/stopwords.txt at configure time.
extern const char* const bundled_stopwords;
}  // namespace detail

namespace {

bool is_word_byte(unsigned char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

char to_lower_ascii(char c)
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

TokenStream tokenize(std::string_view text)
{
    TokenStream tokens;
    std::string current;
    for (char c : text) {
        if (is_word_byte(static_cast<unsigned char>(c))) {
            current.push_back(to_lower_ascii(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

Stoplist Stoplist::parse(std::string_view text)
{
    std::unordered_set<std::string> words;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        auto last = line.find_last_not_of(" \t\r");
        std::string word = line.substr(first, last - first + 1);
        for (auto& c : word) {
            c = to_lower_ascii(c);
        }
        words.insert(std::move(word));
    }
    return Stoplist(std::move(words));
}

Stoplist Stoplist::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open stoplist " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

const Stoplist& Stoplist::english()
{
    static const Stoplist list = parse(detail::bundled_stopwords);
    return list;
}

TokenStream remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist)
{
    TokenStream kept;
    kept.reserve(tokens.size());
    for (const auto& token : tokens) {
        if (!stoplist.contains(token)) {
            kept.push_back(token);
        }
    }
    return kept;
}

TokenStream Analyzer::analyze(std::string_view text) const
{
    TokenStream terms;
    for (auto& token : tokenize(text)) {
        if (stoplist_->contains(token)) {
            continue;
        }
        terms.push_back(stem_ ? porter_stem(token) : std::move(token));
    }
    return terms;
}

}  // namespace trialrank
