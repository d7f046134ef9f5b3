#include "fdh/script.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "fdh/error.hpp"

namespace fdh {

using nlohmann::json;

char to_char(InterruptType t) {
    switch (t) {
    case InterruptType::A: return 'A';
    case InterruptType::D: return 'D';
    case InterruptType::F: return 'F';
    case InterruptType::R: return 'R';
    case InterruptType::S: return 'S';
    }
    return '?';
}

std::optional<InterruptType> interrupt_type_from_char(char c) {
    switch (c) {
    case 'A': case 'a': return InterruptType::A;
    case 'D': case 'd': return InterruptType::D;
    case 'F': case 'f': return InterruptType::F;
    case 'R': case 'r': return InterruptType::R;
    case 'S': case 's': return InterruptType::S;
    default: return std::nullopt;
    }
}

namespace {

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw ParseError(where + "." + key + ": expected string");
    return v.get<std::string>();
}

// "A", "A+F" or ["A", "F"]
std::vector<std::string> type_labels(const json& v, const std::string& where) {
    std::vector<std::string> labels;
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, '+')) {
            part.erase(std::remove_if(part.begin(), part.end(), ::isspace), part.end());
            labels.push_back(part);
        }
        if (s.empty()) labels.clear();
    } else if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_string()) throw ParseError(where + ": type labels must be strings");
            labels.push_back(e.get<std::string>());
        }
    } else {
        throw ParseError(where + ": expected string or array of strings");
    }
    return labels;
}

} // namespace

ConversationScript parse_script(const json& doc, ValidationResult* semantic) {
    if (!doc.is_object()) throw ParseError("script: expected a JSON object");
    ConversationScript s;
    s.conversation_id = require_string(doc, "conversation_id", "script");
    if (auto it = doc.find("topic"); it != doc.end()) {
        if (!it->is_string()) throw ParseError("script.topic: expected string");
        s.topic = it->get<std::string>();
    }
    const json& rounds = require(doc, "rounds", "script");
    if (!rounds.is_array()) throw ParseError("script.rounds: expected array");

    for (std::size_t r = 0; r < rounds.size(); ++r) {
        const std::string where = "rounds[" + std::to_string(r) + "]";
        const json& rj = rounds[r];
        if (!rj.is_object()) throw ParseError(where + ": expected object");
        Round round;
        round.user_text = require_string(rj, "user_text", where);
        if (auto it = rj.find("interruptions"); it != rj.end() && !it->is_null()) {
            if (!it->is_array()) throw ParseError(where + ".interruptions: expected array");
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string iw = where + ".interruptions[" + std::to_string(k) + "]";
                const json& ij = (*it)[k];
                if (!ij.is_object()) throw ParseError(iw + ": expected object");
                Interruption intr;
                intr.text = require_string(ij, "text", iw);
                for (const auto& label : type_labels(require(ij, "type", iw), iw + ".type")) {
                    auto t = label.size() == 1 ? interrupt_type_from_char(label[0]) : std::nullopt;
                    if (t) {
                        intr.types.push_back(*t);
                    } else if (semantic) {
                        semantic->violations.push_back(
                            {iw + ".type", "unknown interruption type '" + label + "'"});
                    }
                }
                round.interruptions.push_back(std::move(intr));
            }
        }
        s.rounds.push_back(std::move(round));
    }
    return s;
}

ConversationScript parse_script_text(std::string_view text, ValidationResult* semantic) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("script: invalid JSON: ") + e.what());
    }
    return parse_script(doc, semantic);
}

ConversationScript load_script(const std::string& path, ValidationResult* semantic) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_script_text(ss.str(), semantic);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

ValidationResult validate_script(const ConversationScript& s) {
    ValidationResult res;
    auto add = [&](std::string field, std::string rule) {
        res.violations.push_back({std::move(field), std::move(rule)});
    };

    if (s.conversation_id.empty()) add("conversation_id", "empty conversation_id");
    if (s.rounds.empty()) add("rounds", "rounds < 1");
    if (s.rounds.size() > kMaxRounds) add("rounds", "rounds > 5");

    std::size_t total = 0;
    for (std::size_t r = 0; r < s.rounds.size(); ++r) {
        const auto& round = s.rounds[r];
        const std::string where = "rounds[" + std::to_string(r) + "]";
        if (is_blank(round.user_text)) add(where + ".user_text", "empty user_text");
        total += round.interruptions.size();
        for (std::size_t k = 0; k < round.interruptions.size(); ++k) {
            const auto& intr = round.interruptions[k];
            const std::string iw = where + ".interruptions[" + std::to_string(k) + "]";
            if (is_blank(intr.text)) add(iw + ".text", "empty interruption text");
            if (intr.types.empty()) add(iw + ".type", "missing interruption type");
            if (intr.types.size() > kMaxLabelsPerInterruption) {
                add(iw + ".type", "more than 2 type labels");
            }
            auto sorted = intr.types;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                add(iw + ".type", "duplicate type label");
            }
        }
    }
    if (total > kMaxInterruptions) add("rounds", "interruptions > 4");
    return res;
}

ValidationResult validate_script_json(const json& doc) {
    ValidationResult parse_time;
    const auto script = parse_script(doc, &parse_time);
    auto res = validate_script(script);
    // A label dropped as unknown may leave an interruption with no types;
    // the unknown-type violation already says what went wrong.
    if (!parse_time.ok()) {
        std::erase_if(res.violations, [&](const Violation& v) {
            return v.rule == "missing interruption type" &&
                   std::any_of(parse_time.violations.begin(), parse_time.violations.end(),
                               [&](const Violation& p) { return p.field == v.field; });
        });
    }
    res.violations.insert(res.violations.begin(), parse_time.violations.begin(),
                          parse_time.violations.end());
    return res;
}

json to_json(const ConversationScript& s) {
    json rounds = json::array();
    for (const auto& r : s.rounds) {
        json intrs = json::array();
        for (const auto& i : r.interruptions) {
            std::string label;
            for (auto t : i.types) {
                if (!label.empty()) label += '+';
                label += to_char(t);
            }
            intrs.push_back({{"type", label}, {"text", i.text}});
        }
        rounds.push_back({{"user_text", r.user_text}, {"interruptions", intrs}});
    }
    return {{"conversation_id", s.conversation_id}, {"topic", s.topic}, {"rounds", rounds}};
}

std::vector<Utterance> user_utterances(const ConversationScript& s) {
    std::vector<Utterance> out;
    for (const auto& r : s.rounds) {
        out.push_back({r.user_text, false, {}});
        for (const auto& i : r.interruptions) out.push_back({i.text, true, i.types});
    }
    return out;
}

} // namespace fdh
