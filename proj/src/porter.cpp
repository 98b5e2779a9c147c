// Porter stemming algorithm, after the 1980 description. Operates in place
// on a lowercase ASCII buffer.

#include <string>

#include "fintwit/textprep.hpp"

namespace fintwit::textprep {

namespace {

class Stemmer {
public:
    explicit Stemmer(std::string word)
        : b_(std::move(word)), k_(static_cast<int>(b_.size()) - 1) {}

    std::string run() {
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return b_.substr(0, k_ + 1);
    }

private:
    bool is_consonant(int i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !is_consonant(i - 1);
            default:
                return true;
        }
    }

    // Measure of b[0..j]: the m in [C](VC)^m[V].
    int measure(int j) const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j) return n;
            if (!is_consonant(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j) return n;
                if (is_consonant(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j) return n;
                if (!is_consonant(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem(int j) const {
        for (int i = 0; i <= j; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(int j) const {
        if (j < 1) return false;
        if (b_[j] != b_[j - 1]) return false;
        return is_consonant(j);
    }

    // consonant-vowel-consonant ending where the last consonant is not w, x, y.
    bool cvc(int j) const {
        if (j < 2 || !is_consonant(j) || is_consonant(j - 1) || !is_consonant(j - 2)) return false;
        const char c = b_[j];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(const char* suffix) {
        const int len = static_cast<int>(std::char_traits<char>::length(suffix));
        if (len > k_ + 1) return false;
        if (b_.compare(k_ + 1 - len, len, suffix) != 0) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(const char* repl) {
        const int len = static_cast<int>(std::char_traits<char>::length(repl));
        b_.replace(j_ + 1, k_ - j_, repl, len);
        k_ = j_ + len;
    }

    void replace_if_m_gt0(const char* repl) {
        if (measure(j_) > 0) set_to(repl);
    }

    void step1ab() {
        if (b_[k_] == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (k_ >= 1 && b_[k_ - 1] != 's') {
                --k_;
            }
        }
        if (ends("eed")) {
            if (measure(j_) > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem(j_)) {
            k_ = j_;
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(k_)) {
                const char c = b_[k_];
                if (c != 'l' && c != 's' && c != 'z') --k_;
            } else if (measure(k_) == 1 && cvc(k_)) {
                j_ = k_;
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem(j_)) b_[k_] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (b_[k_ - 1]) {
            case 'a':
                if (ends("ational")) { replace_if_m_gt0("ate"); break; }
                if (ends("tional")) { replace_if_m_gt0("tion"); }
                break;
            case 'c':
                if (ends("enci")) { replace_if_m_gt0("ence"); break; }
                if (ends("anci")) { replace_if_m_gt0("ance"); }
                break;
            case 'e':
                if (ends("izer")) { replace_if_m_gt0("ize"); }
                break;
            case 'l':
                if (ends("bli")) { replace_if_m_gt0("ble"); break; }
                if (ends("alli")) { replace_if_m_gt0("al"); break; }
                if (ends("entli")) { replace_if_m_gt0("ent"); break; }
                if (ends("eli")) { replace_if_m_gt0("e"); break; }
                if (ends("ousli")) { replace_if_m_gt0("ous"); }
                break;
            case 'o':
                if (ends("ization")) { replace_if_m_gt0("ize"); break; }
                if (ends("ation")) { replace_if_m_gt0("ate"); break; }
                if (ends("ator")) { replace_if_m_gt0("ate"); }
                break;
            case 's':
                if (ends("alism")) { replace_if_m_gt0("al"); break; }
                if (ends("iveness")) { replace_if_m_gt0("ive"); break; }
                if (ends("fulness")) { replace_if_m_gt0("ful"); break; }
                if (ends("ousness")) { replace_if_m_gt0("ous"); }
                break;
            case 't':
                if (ends("aliti")) { replace_if_m_gt0("al"); break; }
                if (ends("iviti")) { replace_if_m_gt0("ive"); break; }
                if (ends("biliti")) { replace_if_m_gt0("ble"); }
                break;
            case 'g':
                if (ends("logi")) { replace_if_m_gt0("log"); }
                break;
        }
    }

    void step3() {
        switch (b_[k_]) {
            case 'e':
                if (ends("icate")) { replace_if_m_gt0("ic"); break; }
                if (ends("ative")) { replace_if_m_gt0(""); break; }
                if (ends("alize")) { replace_if_m_gt0("al"); }
                break;
            case 'i':
                if (ends("iciti")) { replace_if_m_gt0("ic"); }
                break;
            case 'l':
                if (ends("ical")) { replace_if_m_gt0("ic"); break; }
                if (ends("ful")) { replace_if_m_gt0(""); }
                break;
            case 's':
                if (ends("ness")) { replace_if_m_gt0(""); }
                break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (b_[k_ - 1]) {
            case 'a':
                if (ends("al")) break;
                return;
            case 'c':
                if (ends("ance")) break;
                if (ends("ence")) break;
                return;
            case 'e':
                if (ends("er")) break;
                return;
            case 'i':
                if (ends("ic")) break;
                return;
            case 'l':
                if (ends("able")) break;
                if (ends("ible")) break;
                return;
            case 'n':
                if (ends("ant")) break;
                if (ends("ement")) break;
                if (ends("ment")) break;
                if (ends("ent")) break;
                return;
            case 'o':
                if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) break;
                if (ends("ou")) break;
                return;
            case 's':
                if (ends("ism")) break;
                return;
            case 't':
                if (ends("ate")) break;
                if (ends("iti")) break;
                return;
            case 'u':
                if (ends("ous")) break;
                return;
            case 'v':
                if (ends("ive")) break;
                return;
            case 'z':
                if (ends("ize")) break;
                return;
            default:
                return;
        }
        if (measure(j_) > 1) k_ = j_;
    }

    void step5() {
        // 5a
        j_ = k_;
        if (b_[k_] == 'e') {
            const int m = measure(k_ - 1);
            if (m > 1 || (m == 1 && !cvc(k_ - 1))) --k_;
        }
        // 5b
        if (b_[k_] == 'l' && double_consonant(k_) && measure(k_) > 1) --k_;
    }

    std::string b_;
    int k_;       // index of last letter
    int j_ = 0;   // index of last letter of the stem for the current rule
};

}  // namespace

std::string porter_stem(const std::string& word) {
    if (word.size() <= 2) return word;
    for (char c : word) {
        if (c < 'a' || c > 'z') return word;  // digits, apostrophes already stripped upstream
    }
    return Stemmer(word).run();
}

}  // namespace fintwit::textprep
