#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace trialrank {

/// One clinical-trial registry record. Any section may be empty.
struct TrialDoc {
    std::string doc_id;
    std::string title;
    std::string summary;
    std::string description;
    std::string condition;
    std::string eligibility;

    friend bool operator==(const TrialDoc&, const TrialDoc&) = default;
};

/// The five indexed text views of a trial.
enum class View { comb, comb_star, in, ex, main };

inline constexpr std::array<View, 5> all_views{View::comb, View::comb_star, View::in, View::ex, View::main};

/// "i_comb", "i_comb_star", "i_in", "i_ex", "i_main".
[[nodiscard]] std::string_view view_name(View view) noexcept;
/// Throws Error(unknown_view).
[[nodiscard]] View parse_view(std::string_view name);

struct EligibilitySplit {
    std::string inclusion;
    std::string exclusion;
    bool inclusion_found = false;
    bool exclusion_found = false;
    /// Text preceding the first marker when at least one marker was found.
    std::string preamble;
    /// Matched marker text, including decoration. Empty when not found.
    std::string inclusion_marker;
    std::string exclusion_marker;
};

/// Regexes recognising the start of the inclusion and exclusion blocks.
struct MarkerSet {
    std::regex inclusion;
    std::regex exclusion;

    /// Case-insensitive "[key] inclusion|exclusion criteria" with optional
    /// leading bullets/numbering and trailing colon or dash.
    [[nodiscard]] static const MarkerSet& standard();
    [[nodiscard]] static MarkerSet from_patterns(const std::string& inclusion, const std::string& exclusion);
};

struct FieldViews {
    std::string i_comb;
    std::string i_comb_star;
    std::string i_in;
    std::string i_ex;
    std::string i_main;

    [[nodiscard]] const std::string& get(View view) const noexcept;

    friend bool operator==(const FieldViews&, const FieldViews&) = default;
};

/// Row of the intermediate corpus file.
struct CorpusRecord {
    std::string doc_id;
    FieldViews views;

    friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

/// Removes tags, CDATA wrappers and character entities; collapses whitespace runs
/// into single spaces and trims.
[[nodiscard]] std::string strip_markup(std::string_view text);

/// Parses either a registry XML record (<clinical_study> root) or a JSON
/// object with keys doc_id|nct_id, title, summary, description, condition
/// (string or array) and eligibility.
/// Throws Error(malformed_record) or Error(missing_id).
[[nodiscard]] TrialDoc parse_trial(std::string_view raw_record);

[[nodiscard]] EligibilitySplit split_eligibility(std::string_view eligibility,
                                                 const MarkerSet& markers = MarkerSet::standard());

[[nodiscard]] FieldViews build_field_views(const TrialDoc& doc,
                                           const MarkerSet& markers = MarkerSet::standard());

/// Loads every record below `input`: a directory is walked recursively for
/// *.xml files (in path order); a regular file is read as one record per line.
/// Records failing to parse are logged and skipped. Repeated doc_ids keep the
/// position of the first occurrence and the content of the last.
/// Throws Error(corpus_unreadable) when `input` cannot be read.
[[nodiscard]] std::vector<TrialDoc> load_trials(const std::filesystem::path& input, unsigned threads = 1);

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
/// Throws Error(corpus_unreadable) on I/O or format problems.
[[nodiscard]] std::vector<CorpusRecord> read_corpus(std::istream& in);
[[nodiscard]] std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path);

[[nodiscard]] std::vector<CorpusRecord> build_corpus(const std::vector<TrialDoc>& docs,
                                                     unsigned threads = 1,
                                                     const MarkerSet& markers = MarkerSet::standard());

}  // namespace trialrank
