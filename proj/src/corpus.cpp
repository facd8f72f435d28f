#include "trialrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "trialrank/error.hpp"
#include "trialrank/parallel.hpp"

namespace trialrank {

namespace {

constexpr std::array<std::string_view, 5> view_names{"i_comb", "i_comb_star", "i_in", "i_ex", "i_main"};

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

void append_utf8(std::string& out, unsigned long cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x110000) {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes one entity starting at text[pos] == '&'. Returns the number of
// bytes consumed, or 0 when the sequence is not a recognised entity.
std::size_t decode_entity(std::string_view text, std::size_t pos, std::string& out)
{
    auto semi = text.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 10) {
        return 0;
    }
    auto name = text.substr(pos + 1, semi - pos - 1);
    static const std::unordered_map<std::string_view, std::string_view> named{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
    if (auto it = named.find(name); it != named.end()) {
        out.append(it->second);
        return semi - pos + 1;
    }
    if (name.size() >= 2 && name[0] == '#') {
        int base = 10;
        auto digits = name.substr(1);
        if (digits[0] == 'x' || digits[0] == 'X') {
            base = 16;
            digits.remove_prefix(1);
        }
        if (digits.empty()) {
            return 0;
        }
        unsigned long cp = 0;
        for (char c : digits) {
            int v = -1;
            if (c >= '0' && c <= '9') {
                v = c - '0';
            } else if (base == 16 && c >= 'a' && c <= 'f') {
                v = c - 'a' + 10;
            } else if (base == 16 && c >= 'A' && c <= 'F') {
                v = c - 'A' + 10;
            }
            if (v < 0) {
                return 0;
            }
            cp = cp * static_cast<unsigned long>(base) + static_cast<unsigned long>(v);
            if (cp > 0x10FFFF) {
                return 0;
            }
        }
        append_utf8(out, cp);
        return semi - pos + 1;
    }
    return 0;
}

std::string collapse_whitespace(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string join_nonempty(std::initializer_list<std::string_view> parts)
{
    std::string out;
    for (auto part : parts) {
        if (part.empty()) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.append(part);
    }
    return out;
}

// --- minimal element lookup for registry XML -------------------------------

struct ElementSpan {
    std::size_t open_begin;
    std::size_t inner_begin;
    std::size_t inner_end;
    std::size_t close_end;
};

std::optional<ElementSpan> find_element(std::string_view xml, std::string_view tag, std::size_t from = 0)
{
    std::string open = "<" + std::string(tag);
    std::string close = "</" + std::string(tag);
    for (auto pos = xml.find(open, from); pos != std::string_view::npos; pos = xml.find(open, pos + 1)) {
        auto after = pos + open.size();
        if (after >= xml.size()) {
            break;
        }
        char next = xml[after];
        if (next != '>' && next != '/' && !is_space(next)) {
            continue;
        }
        auto tag_end = xml.find('>', after);
        if (tag_end == std::string_view::npos) {
            throw Error(ErrorCode::malformed_record, "unterminated <" + std::string(tag) + "> tag");
        }
        if (xml[tag_end - 1] == '/') {
            return ElementSpan{pos, tag_end + 1, tag_end + 1, tag_end + 1};
        }
        auto close_pos = xml.find(close, tag_end + 1);
        while (close_pos != std::string_view::npos) {
            auto c = close_pos + close.size();
            if (c < xml.size() && (xml[c] == '>' || is_space(xml[c]))) {
                break;
            }
            close_pos = xml.find(close, close_pos + 1);
        }
        if (close_pos == std::string_view::npos) {
            throw Error(ErrorCode::malformed_record, "missing </" + std::string(tag) + ">");
        }
        auto close_end = xml.find('>', close_pos);
        if (close_end == std::string_view::npos) {
            throw Error(ErrorCode::malformed_record, "unterminated </" + std::string(tag) + ">");
        }
        return ElementSpan{pos, tag_end + 1, close_pos, close_end + 1};
    }
    return std::nullopt;
}

std::string_view inner_of(std::string_view xml, const ElementSpan& span)
{
    return xml.substr(span.inner_begin, span.inner_end - span.inner_begin);
}

std::string element_text(std::string_view xml, std::string_view tag)
{
    auto span = find_element(xml, tag);
    return span ? strip_markup(inner_of(xml, *span)) : std::string{};
}

TrialDoc parse_trial_xml(std::string_view raw)
{
    auto root = find_element(raw, "clinical_study");
    if (!root) {
        throw Error(ErrorCode::malformed_record, "no <clinical_study> element");
    }
    auto study = inner_of(raw, *root);

    TrialDoc doc;
    doc.doc_id = element_text(study, "nct_id");
    if (doc.doc_id.empty()) {
        throw Error(ErrorCode::missing_id, "record has no <nct_id>");
    }
    doc.title = element_text(study, "brief_title");
    if (doc.title.empty()) {
        doc.title = element_text(study, "official_title");
    }
    doc.summary = element_text(study, "brief_summary");
    doc.description = element_text(study, "detailed_description");

    std::vector<std::string> conditions;
    for (auto span = find_element(study, "condition"); span; span = find_element(study, "condition", span->close_end)) {
        auto text = strip_markup(inner_of(study, *span));
        if (!text.empty()) {
            conditions.push_back(std::move(text));
        }
    }
    for (const auto& c : conditions) {
        doc.condition = join_nonempty({doc.condition, c});
    }

    if (auto elig = find_element(study, "eligibility")) {
        doc.eligibility = element_text(inner_of(study, *elig), "criteria");
    }
    return doc;
}

std::string json_text(const nlohmann::json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return {};
    }
    if (it->is_string()) {
        return strip_markup(it->get<std::string>());
    }
    if (it->is_array()) {
        std::string joined;
        for (const auto& item : *it) {
            if (!item.is_string()) {
                throw Error(ErrorCode::malformed_record, std::string("non-string entry in '") + key + "'");
            }
            joined = join_nonempty({joined, strip_markup(item.get<std::string>())});
        }
        return joined;
    }
    throw Error(ErrorCode::malformed_record, std::string("field '") + key + "' must be a string");
}

TrialDoc parse_trial_json(std::string_view raw)
{
    auto obj = nlohmann::json::parse(raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw Error(ErrorCode::malformed_record, "invalid JSON record");
    }
    TrialDoc doc;
    doc.doc_id = json_text(obj, "doc_id");
    if (doc.doc_id.empty()) {
        doc.doc_id = json_text(obj, "nct_id");
    }
    if (doc.doc_id.empty()) {
        throw Error(ErrorCode::missing_id, "record has no doc_id");
    }
    doc.title = json_text(obj, "title");
    doc.summary = json_text(obj, "summary");
    doc.description = json_text(obj, "description");
    doc.condition = json_text(obj, "condition");
    doc.eligibility = json_text(obj, "eligibility");
    return doc;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::corpus_unreadable, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

std::string_view view_name(View view) noexcept
{
    return view_names[static_cast<std::size_t>(view)];
}

View parse_view(std::string_view name)
{
    for (auto view : all_views) {
        if (view_name(view) == name) {
            return view;
        }
    }
    throw Error(ErrorCode::unknown_view, "'" + std::string(name) + "'");
}

const std::string& FieldViews::get(View view) const noexcept
{
    switch (view) {
    case View::comb: return i_comb;
    case View::comb_star: return i_comb_star;
    case View::in: return i_in;
    case View::ex: return i_ex;
    case View::main: break;
    }
    return i_main;
}

const MarkerSet& MarkerSet::standard()
{
    static const MarkerSet markers = from_patterns(
        R"((?:(?:[-*]|\d+[.)])\s*)?(?:key\s+)?inclusion\s+criteria\s*(?::|-+)?)",
        R"((?:(?:[-*]|\d+[.)])\s*)?(?:key\s+)?exclusion\s+criteria\s*(?::|-+)?)");
    return markers;
}

MarkerSet MarkerSet::from_patterns(const std::string& inclusion, const std::string& exclusion)
{
    constexpr auto flags = std::regex::ECMAScript | std::regex::icase;
    return MarkerSet{std::regex(inclusion, flags), std::regex(exclusion, flags)};
}

std::string strip_markup(std::string_view text)
{
    std::string plain;
    plain.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '<') {
            if (text.substr(i, 9) == "<![CDATA[") {
                auto end = text.find("]]>", i + 9);
                auto stop = end == std::string_view::npos ? text.size() : end;
                plain.append(text.substr(i + 9, stop - i - 9));
                i = end == std::string_view::npos ? text.size() : end + 3;
                continue;
            }
            if (text.substr(i, 4) == "<!--") {
                auto end = text.find("-->", i + 4);
                i = end == std::string_view::npos ? text.size() : end + 3;
                plain.push_back(' ');
                continue;
            }
            auto end = text.find('>', i + 1);
            // A lone '<' (e.g. "age < 18") is text, not a tag.
            bool looks_like_tag = end != std::string_view::npos && i + 1 < text.size() &&
                                  (std::isalpha(static_cast<unsigned char>(text[i + 1])) != 0 ||
                                   text[i + 1] == '/' || text[i + 1] == '!' || text[i + 1] == '?');
            if (looks_like_tag) {
                plain.push_back(' ');
                i = end + 1;
                continue;
            }
        } else if (c == '&') {
            if (auto used = decode_entity(text, i, plain); used > 0) {
                i += used;
                continue;
            }
        }
        plain.push_back(c);
        ++i;
    }
    return collapse_whitespace(plain);
}

TrialDoc parse_trial(std::string_view raw_record)
{
    auto body = trim(raw_record);
    if (body.empty()) {
        throw Error(ErrorCode::malformed_record, "empty record");
    }
    if (body.front() == '<') {
        return parse_trial_xml(body);
    }
    if (body.front() == '{') {
        return parse_trial_json(body);
    }
    throw Error(ErrorCode::malformed_record, "unrecognised record format");
}

EligibilitySplit split_eligibility(std::string_view eligibility, const MarkerSet& markers)
{
    EligibilitySplit split;
    const std::string text(eligibility);
    std::smatch inc;
    std::smatch exc;
    split.inclusion_found = std::regex_search(text, inc, markers.inclusion);
    split.exclusion_found = std::regex_search(text, exc, markers.exclusion);

    const auto full = std::string(trim(text));
    auto segment = [&](std::size_t begin, std::size_t end) {
        return std::string(trim(std::string_view(text).substr(begin, end - begin)));
    };

    if (!split.inclusion_found && !split.exclusion_found) {
        split.inclusion = full;
        split.exclusion = full;
        return split;
    }

    auto inc_begin = split.inclusion_found ? static_cast<std::size_t>(inc.position(0)) : text.size();
    auto inc_end = split.inclusion_found ? inc_begin + static_cast<std::size_t>(inc.length(0)) : text.size();
    auto exc_begin = split.exclusion_found ? static_cast<std::size_t>(exc.position(0)) : text.size();
    auto exc_end = split.exclusion_found ? exc_begin + static_cast<std::size_t>(exc.length(0)) : text.size();

    // Decoration lets adjacent markers share characters ("criteria - Exclusion");
    // the later marker is then searched again after the earlier one ends.
    if (split.inclusion_found && split.exclusion_found) {
        auto research = [&](const std::regex& re, std::size_t from, std::size_t& begin, std::size_t& end,
                            std::smatch& m) {
            if (std::regex_search(text.cbegin() + static_cast<std::ptrdiff_t>(from), text.cend(), m, re)) {
                begin = from + static_cast<std::size_t>(m.position(0));
                end = begin + static_cast<std::size_t>(m.length(0));
                return true;
            }
            return false;
        };
        if (inc_begin <= exc_begin && exc_begin < inc_end) {
            split.exclusion_found = research(markers.exclusion, inc_end, exc_begin, exc_end, exc);
        } else if (exc_begin < inc_begin && inc_begin < exc_end) {
            split.inclusion_found = research(markers.inclusion, exc_end, inc_begin, inc_end, inc);
        }
        if (!split.exclusion_found) {
            exc_begin = exc_end = text.size();
        }
        if (!split.inclusion_found) {
            inc_begin = inc_end = text.size();
        }
    }

    split.preamble = segment(0, std::min(inc_begin, exc_begin));
    if (split.inclusion_found) {
        split.inclusion_marker = inc.str(0);
    }
    if (split.exclusion_found) {
        split.exclusion_marker = exc.str(0);
    }
    if (split.inclusion_found) {
        auto stop = (split.exclusion_found && exc_begin > inc_begin) ? exc_begin : text.size();
        split.inclusion = segment(inc_end, stop);
    } else {
        split.inclusion = full;
    }
    if (split.exclusion_found) {
        auto stop = (split.inclusion_found && inc_begin > exc_begin) ? inc_begin : text.size();
        split.exclusion = segment(exc_end, stop);
    } else {
        split.exclusion = full;
    }
    return split;
}

FieldViews build_field_views(const TrialDoc& doc, const MarkerSet& markers)
{
    auto split = split_eligibility(doc.eligibility, markers);
    FieldViews views;
    views.i_main = join_nonempty({doc.title, doc.description, doc.condition, doc.summary});
    views.i_comb = join_nonempty({views.i_main, doc.eligibility});
    views.i_comb_star =
        join_nonempty({doc.title, doc.summary, split.inclusion_found ? std::string_view(split.inclusion) : ""});
    views.i_in = std::move(split.inclusion);
    views.i_ex = std::move(split.exclusion);
    return views;
}

std::vector<TrialDoc> load_trials(const std::filesystem::path& input, unsigned threads)
{
    namespace fs = std::filesystem;
    std::vector<std::string> raw;
    std::vector<std::string> origin;
    std::error_code ec;
    if (fs::is_directory(input, ec)) {
        std::vector<fs::path> files;
        for (fs::recursive_directory_iterator it(input, ec), end; !ec && it != end; it.increment(ec)) {
            if (!it->is_regular_file()) {
                continue;
            }
            auto ext = it->path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext == ".xml") {
                files.push_back(it->path());
            }
        }
        if (ec) {
            throw Error(ErrorCode::corpus_unreadable, input.string() + ": " + ec.message());
        }
        std::sort(files.begin(), files.end());
        raw.resize(files.size());
        parallel_for(files.size(), threads, [&](std::size_t i) { raw[i] = read_file(files[i]); });
        for (const auto& f : files) {
            origin.push_back(f.string());
        }
    } else if (fs::is_regular_file(input, ec)) {
        std::istringstream lines(read_file(input));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (trim(line).empty()) {
                continue;
            }
            raw.push_back(std::move(line));
            origin.push_back(input.string() + ":" + std::to_string(lineno));
        }
    } else {
        throw Error(ErrorCode::corpus_unreadable, "no such file or directory: " + input.string());
    }

    std::vector<std::optional<TrialDoc>> parsed(raw.size());
    parallel_for(raw.size(), threads, [&](std::size_t i) {
        try {
            parsed[i] = parse_trial(raw[i]);
        } catch (const Error& e) {
            spdlog::warn("skipping record {}: {}", origin[i], e.what());
        }
    });

    std::vector<TrialDoc> docs;
    std::unordered_map<std::string, std::size_t> position;
    for (auto& doc : parsed) {
        if (!doc) {
            continue;
        }
        if (auto it = position.find(doc->doc_id); it != position.end()) {
            spdlog::warn("duplicate doc_id {}; keeping the later record", doc->doc_id);
            docs[it->second] = std::move(*doc);
            continue;
        }
        position.emplace(doc->doc_id, docs.size());
        docs.push_back(std::move(*doc));
    }
    return docs;
}

std::vector<CorpusRecord> build_corpus(const std::vector<TrialDoc>& docs, unsigned threads, const MarkerSet& markers)
{
    std::vector<CorpusRecord> records(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        records[i] = CorpusRecord{docs[i].doc_id, build_field_views(docs[i], markers)};
    });
    return records;
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records)
{
    for (const auto& r : records) {
        nlohmann::ordered_json row;
        row["doc_id"] = r.doc_id;
        row["i_comb"] = r.views.i_comb;
        row["i_comb_star"] = r.views.i_comb_star;
        row["i_in"] = r.views.i_in;
        row["i_ex"] = r.views.i_ex;
        row["i_main"] = r.views.i_main;
        out << row.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    }
    write_corpus(out, records);
    if (!out) {
        throw Error(ErrorCode::io_failure, "write failed: " + path.string());
    }
}

std::vector<CorpusRecord> read_corpus(std::istream& in)
{
    std::vector<CorpusRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw Error(ErrorCode::corpus_unreadable, "line " + std::to_string(lineno) + ": invalid JSON");
        }
        auto field = [&](const char* key) {
            auto it = row.find(key);
            if (it == row.end() || !it->is_string()) {
                throw Error(ErrorCode::corpus_unreadable,
                            "line " + std::to_string(lineno) + ": missing string field '" + key + "'");
            }
            return it->get<std::string>();
        };
        CorpusRecord r;
        r.doc_id = field("doc_id");
        r.views.i_comb = field("i_comb");
        r.views.i_comb_star = field("i_comb_star");
        r.views.i_in = field("i_in");
        r.views.i_ex = field("i_ex");
        r.views.i_main = field("i_main");
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::corpus_unreadable, "cannot open " + path.string());
    }
    return read_corpus(in);
}

}  // namespace trialrank
