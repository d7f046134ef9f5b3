#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fdh {

// Lowercase, ASCII punctuation removed, whitespace collapsed. Idempotent.
std::string normalize_text(std::string_view s);
std::vector<std::string> tokenize_words(std::string_view normalized);

struct WerResult {
    double wer_percent = 0.0;
    std::size_t substitutions = 0;
    std::size_t deletions = 0;
    std::size_t insertions = 0;
    std::size_t reference_words = 0;

    std::size_t edits() const { return substitutions + deletions + insertions; }
};

// Minimal word-level edit distance after normalization. Throws
// UndefinedMetricError when the normalized reference has no words.
WerResult word_error_rate(std::string_view reference, std::string_view hypothesis);
WerResult word_error_rate(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// Corpus-level WER: edits and reference words pooled across utterances.
class WerAccumulator {
public:
    void add(const WerResult& r);
    bool empty() const { return total_.reference_words == 0; }
    WerResult result() const;

private:
    WerResult total_;
};

} // namespace fdh
