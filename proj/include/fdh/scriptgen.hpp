#pragma once

#include <map>
#include <string>
#include <vector>

#include "judge.hpp"
#include "script.hpp"

namespace fdh {

struct GenerateOptions {
    std::string model = "gpt-4o-2024-11-20";
    double temperature = 0.7;
    // Extra attempts per conversation after the first invalid answer.
    int retry_budget = 3;
    int max_in_flight = 4;
    std::string id_prefix = "conv-";
    // Relative weights steering the mix of interruption types. The default
    // follows the distribution of the released corpus.
    std::map<char, double> type_targets = {{'A', 350}, {'D', 58}, {'F', 393}, {'R', 109}, {'S', 316}};
};

std::string scriptgen_prompt(const std::string& topic, const std::string& conversation_id,
                             const std::map<char, double>& type_targets);

// Requests `count` conversations, cycling through the topics. Each answer
// is parsed and validated; invalid ones are requested again until the
// retry budget runs out, which throws an Error naming the conversation and
// its last violations. The id and topic of each script are fixed by the
// caller, not the model.
std::vector<ConversationScript> generate_scripts(const std::vector<std::string>& topics, int count,
                                                 ChatClient& client, const GenerateOptions& opts = {});

struct CorpusStats {
    std::size_t conversations = 0;
    std::size_t rounds = 0;
    std::size_t interruptions = 0;  // distinct interruption utterances
    std::size_t dual_labelled = 0;  // interruptions carrying two labels
    std::map<char, std::size_t> per_type;  // label counts; dual labels count twice

    std::size_t label_total() const;
};

CorpusStats corpus_stats(const std::vector<ConversationScript>& scripts);

// Markdown table: conversations, one column per type, total interruptions.
std::string format_corpus_stats(const CorpusStats& s);

} // namespace fdh
