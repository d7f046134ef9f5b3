#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fdh {

// Interruption categories of the conversation corpus.
//   A  affirmative acknowledgment
//   D  denial and discontent
//   F  further inquiry
//   R  requiring a repeat
//   S  topic shift
enum class InterruptType { A, D, F, R, S };

inline constexpr std::array<InterruptType, 5> kAllInterruptTypes = {
    InterruptType::A, InterruptType::D, InterruptType::F, InterruptType::R, InterruptType::S};

char to_char(InterruptType t);
std::optional<InterruptType> interrupt_type_from_char(char c);

struct Interruption {
    // One or two labels; an affirmation/denial may co-occur with a further
    // inquiry or topic shift in the same utterance.
    std::vector<InterruptType> types;
    std::string text;
};

struct Round {
    std::string user_text;
    std::vector<Interruption> interruptions;
};

struct ConversationScript {
    std::string conversation_id;
    std::string topic;
    std::vector<Round> rounds;
};

inline constexpr std::size_t kMaxRounds = 5;
inline constexpr std::size_t kMaxInterruptions = 4;
inline constexpr std::size_t kMaxLabelsPerInterruption = 2;

struct Violation {
    std::string field;  // e.g. "rounds[2].interruptions[0].type"
    std::string rule;   // e.g. "unknown interruption type"
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Structural parse. Throws ParseError for malformed documents; semantic
// problems (too many rounds, unknown type letters) are left for
// validate_script so they can be reported together.
ConversationScript parse_script(const nlohmann::json& doc, ValidationResult* semantic = nullptr);
ConversationScript parse_script_text(std::string_view text, ValidationResult* semantic = nullptr);
ConversationScript load_script(const std::string& path, ValidationResult* semantic = nullptr);

ValidationResult validate_script(const ConversationScript& script);

// Parses and validates in one step. Unknown type letters found while
// parsing are merged into the returned violations.
ValidationResult validate_script_json(const nlohmann::json& doc);

nlohmann::json to_json(const ConversationScript& script);

// One user utterance in conversational order: each round's inquiry followed
// by the interruptions made during the assistant's reply to it.
struct Utterance {
    std::string text;
    bool is_interrupt = false;
    std::vector<InterruptType> types;
};

std::vector<Utterance> user_utterances(const ConversationScript& script);

} // namespace fdh
