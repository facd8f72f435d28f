#include <string>
#include <string_view>

#include "trialrank/textproc.hpp"

namespace trialrank {

namespace {

// Direct port of the reference C stemmer. `end_` is the index of the last
// character of the current word, `stem_end_` marks the end of the stem
// found by the latest successful ends() call.
class PorterStemmer {
  public:
    explicit PorterStemmer(std::string_view word) : b_(word), end_(static_cast<int>(word.size()) - 1) {}

    std::string run()
    {
        if (end_ <= 1) {
            return b_;
        }
        step1ab();
        if (end_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(end_ + 1));
    }

  private:
    [[nodiscard]] bool cons(int i) const
    {
        switch (b_[i]) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u': return false;
        case 'y': return i == 0 ? true : !cons(i - 1);
        default: return true;
        }
    }

    // Number of VC sequences in [0, stem_end_].
    [[nodiscard]] int measure() const
    {
        int n = 0;
        int i = 0;
        for (;;) {
            if (i > stem_end_) {
                return n;
            }
            if (!cons(i)) {
                break;
            }
            ++i;
        }
        ++i;
        for (;;) {
            for (;;) {
                if (i > stem_end_) {
                    return n;
                }
                if (cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
            ++n;
            for (;;) {
                if (i > stem_end_) {
                    return n;
                }
                if (!cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
        }
    }

    [[nodiscard]] bool vowel_in_stem() const
    {
        for (int i = 0; i <= stem_end_; ++i) {
            if (!cons(i)) {
                return true;
            }
        }
        return false;
    }

    [[nodiscard]] bool double_consonant(int i) const
    {
        if (i < 1 || b_[i] != b_[i - 1]) {
            return false;
        }
        return cons(i);
    }

    // consonant-vowel-consonant ending at i, where the last is not w, x or y.
    [[nodiscard]] bool cvc(int i) const
    {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) {
            return false;
        }
        char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view suffix)
    {
        auto len = static_cast<int>(suffix.size());
        if (suffix.back() != b_[end_]) {
            return false;
        }
        if (len > end_ + 1) {
            return false;
        }
        if (std::string_view(b_).substr(static_cast<std::size_t>(end_ - len + 1), suffix.size()) != suffix) {
            return false;
        }
        stem_end_ = end_ - len;
        return true;
    }

    void set_to(std::string_view s)
    {
        b_.resize(static_cast<std::size_t>(stem_end_ + 1));
        b_.append(s);
        end_ = stem_end_ + static_cast<int>(s.size());
    }

    void replace_if_measured(std::string_view s)
    {
        if (measure() > 0) {
            set_to(s);
        }
    }

    void truncate_to_end() { b_.resize(static_cast<std::size_t>(end_ + 1)); }

    void step1ab()
    {
        if (b_[end_] == 's') {
            if (ends("sses")) {
                end_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (b_[end_ - 1] != 's') {
                --end_;
            }
        }
        truncate_to_end();
        if (ends("eed")) {
            if (measure() > 0) {
                --end_;
            }
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            end_ = stem_end_;
            truncate_to_end();
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(end_)) {
                --end_;
                char ch = b_[end_];
                if (ch == 'l' || ch == 's' || ch == 'z') {
                    ++end_;
                }
            } else {
                stem_end_ = end_;
                if (measure() == 1 && cvc(end_)) {
                    set_to("e");
                }
            }
        }
        truncate_to_end();
    }

    void step1c()
    {
        if (ends("y") && vowel_in_stem()) {
            b_[end_] = 'i';
        }
    }

    bool try_rules(std::initializer_list<std::pair<std::string_view, std::string_view>> rules)
    {
        for (const auto& [suffix, replacement] : rules) {
            if (ends(suffix)) {
                replace_if_measured(replacement);
                truncate_to_end();
                return true;
            }
        }
        return false;
    }

    void step2()
    {
        switch (b_[end_ - 1]) {
        case 'a': try_rules({{"ational", "ate"}, {"tional", "tion"}}); break;
        case 'c': try_rules({{"enci", "ence"}, {"anci", "ance"}}); break;
        case 'e': try_rules({{"izer", "ize"}}); break;
        case 'l':
            try_rules({{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}});
            break;
        case 'o': try_rules({{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}); break;
        case 's':
            try_rules({{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}});
            break;
        case 't': try_rules({{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}); break;
        case 'g': try_rules({{"logi", "log"}}); break;
        default: break;
        }
    }

    void step3()
    {
        switch (b_[end_]) {
        case 'e': try_rules({{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}); break;
        case 'i': try_rules({{"iciti", "ic"}}); break;
        case 'l': try_rules({{"ical", "ic"}, {"ful", ""}}); break;
        case 's': try_rules({{"ness", ""}}); break;
        default: break;
        }
    }

    bool ends_any(std::initializer_list<std::string_view> suffixes)
    {
        for (auto suffix : suffixes) {
            if (ends(suffix)) {
                return true;
            }
        }
        return false;
    }

    void step4()
    {
        bool matched = false;
        switch (b_[end_ - 1]) {
        case 'a': matched = ends("al"); break;
        case 'c': matched = ends_any({"ance", "ence"}); break;
        case 'e': matched = ends("er"); break;
        case 'i': matched = ends("ic"); break;
        case 'l': matched = ends_any({"able", "ible"}); break;
        case 'n': matched = ends_any({"ant", "ement", "ment", "ent"}); break;
        case 'o':
            if (ends("ion") && stem_end_ >= 0 && (b_[stem_end_] == 's' || b_[stem_end_] == 't')) {
                matched = true;
            } else {
                matched = ends("ou");
            }
            break;
        case 's': matched = ends("ism"); break;
        case 't': matched = ends_any({"ate", "iti"}); break;
        case 'u': matched = ends("ous"); break;
        case 'v': matched = ends("ive"); break;
        case 'z': matched = ends("ize"); break;
        default: break;
        }
        if (matched && measure() > 1) {
            end_ = stem_end_;
            truncate_to_end();
        }
    }

    void step5()
    {
        stem_end_ = end_;
        if (b_[end_] == 'e') {
            int m = measure();
            if (m > 1 || (m == 1 && !cvc(end_ - 1))) {
                --end_;
            }
        }
        if (b_[end_] == 'l' && double_consonant(end_) && measure() > 1) {
            --end_;
        }
        truncate_to_end();
    }

    std::string b_;
    int end_;
    int stem_end_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word)
{
    if (word.empty()) {
        return {};
    }
    return PorterStemmer(word).run();
}

}  // namespace trialrank
