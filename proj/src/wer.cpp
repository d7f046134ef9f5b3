#include "fdh/wer.hpp"

#include <cctype>
#include <sstream>

#include "fdh/error.hpp"

namespace fdh {

std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char c : s) {
        if (c < 0x80 && std::ispunct(c)) continue;
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
    return out;
}

std::vector<std::string> tokenize_words(std::string_view normalized) {
    std::vector<std::string> words;
    std::istringstream in{std::string(normalized)};
    for (std::string w; in >> w;) words.push_back(std::move(w));
    return words;
}

WerResult word_error_rate(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
    if (ref.empty()) throw UndefinedMetricError("WER undefined: reference has no words");
    const std::size_t n = ref.size(), m = hyp.size();
    // cost[i][j]: edits to turn ref[0..i) into hyp[0..j)
    std::vector<std::vector<std::size_t>> cost(n + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) cost[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) cost[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cost[i][j] = std::min({sub, cost[i - 1][j] + 1, cost[i][j - 1] + 1});
        }
    }

    WerResult r;
    r.reference_words = n;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
            if (ref[i - 1] != hyp[j - 1]) ++r.substitutions;
            --i;
            --j;
        } else if (i > 0 && cost[i][j] == cost[i - 1][j] + 1) {
            ++r.deletions;
            --i;
        } else {
            ++r.insertions;
            --j;
        }
    }
    r.wer_percent = 100.0 * static_cast<double>(r.edits()) / static_cast<double>(n);
    return r;
}

WerResult word_error_rate(std::string_view reference, std::string_view hypothesis) {
    return word_error_rate(tokenize_words(normalize_text(reference)),
                           tokenize_words(normalize_text(hypothesis)));
}

void WerAccumulator::add(const WerResult& r) {
    total_.substitutions += r.substitutions;
    total_.deletions += r.deletions;
    total_.insertions += r.insertions;
    total_.reference_words += r.reference_words;
}

WerResult WerAccumulator::result() const {
    if (empty()) throw UndefinedMetricError("WER undefined: no reference words");
    WerResult r = total_;
    r.wer_percent = 100.0 * static_cast<double>(r.edits()) / static_cast<double>(r.reference_words);
    return r;
}

} // namespace fdh
