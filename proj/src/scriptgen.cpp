#include "fdh/scriptgen.hpp"

#include <atomic>
#include <cstdio>
#include <optional>
#include <thread>

#include "fdh/error.hpp"
#include "fdh/prompts.hpp"

namespace fdh {

using nlohmann::json;

namespace {

std::string substitute(std::string text, std::string_view name, std::string_view value) {
    const std::string token = "{{" + std::string(name) + "}}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size()))
        text.replace(pos, token.size(), value);
    return text;
}

std::string describe_targets(const std::map<char, double>& targets) {
    double total = 0;
    for (const auto& [t, w] : targets) total += w;
    if (total <= 0) return "no preference";
    std::string out;
    for (const auto& [t, w] : targets) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%c %.0f%%", t, 100.0 * w / total);
        if (!out.empty()) out += ", ";
        out += buf;
    }
    return out;
}

std::string conversation_id(const GenerateOptions& opts, int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index + 1);
    return opts.id_prefix + buf;
}

std::string summarize(const ValidationResult& v) {
    std::string out;
    for (const auto& x : v.violations) {
        if (!out.empty()) out += "; ";
        out += x.field + ": " + x.rule;
    }
    return out;
}

} // namespace

std::string scriptgen_prompt(const std::string& topic, const std::string& conversation_id,
                             const std::map<char, double>& type_targets) {
    std::string p(prompts::kScriptgenV1);
    p = substitute(p, "topic", topic);
    p = substitute(p, "conversation_id", conversation_id);
    return substitute(p, "type_targets", describe_targets(type_targets));
}

std::vector<ConversationScript> generate_scripts(const std::vector<std::string>& topics, int count,
                                                 ChatClient& client, const GenerateOptions& opts) {
    if (count < 0) throw InvalidArgument("count must be non-negative");
    if (count > 0 && topics.empty()) throw InvalidArgument("no topics given");

    std::vector<std::optional<ConversationScript>> out(static_cast<std::size_t>(count));
    std::vector<std::string> errors(out.size());
    std::atomic<int> next{0};

    auto produce = [&](int i) {
        const auto id = conversation_id(opts, i);
        const auto& topic = topics[static_cast<std::size_t>(i) % topics.size()];
        const ChatRequest req{opts.model, scriptgen_prompt(topic, id, opts.type_targets), opts.temperature, true};
        std::string last;
        for (int attempt = 0; attempt <= opts.retry_budget; ++attempt) {
            const auto answer = client.complete(req);
            try {
                const auto b = answer.find('{');
                const auto e = answer.rfind('}');
                if (b == std::string::npos || e == std::string::npos || e < b)
                    throw ParseError("no JSON object in answer");
                json doc = json::parse(answer.substr(b, e - b + 1));
                if (!doc.is_object()) throw ParseError("answer is not a JSON object");
                doc["conversation_id"] = id;
                doc["topic"] = topic;
                const auto v = validate_script_json(doc);
                if (v.ok()) {
                    out[static_cast<std::size_t>(i)] = parse_script(doc);
                    return;
                }
                last = summarize(v);
            } catch (const ParseError& ex) {
                last = ex.what();
            } catch (const json::parse_error& ex) {
                last = ex.what();
            }
        }
        errors[static_cast<std::size_t>(i)] =
            "retry budget exhausted for " + id + " after " + std::to_string(opts.retry_budget + 1) +
            " attempts: " + last;
    };

    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                produce(i);
            } catch (const Error& ex) {
                errors[static_cast<std::size_t>(i)] = conversation_id(opts, i) + ": " + ex.what();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int n = std::min(std::max(1, opts.max_in_flight), std::max(1, count));
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    }

    std::vector<ConversationScript> scripts;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!out[i]) throw Error(errors[i]);
        scripts.push_back(std::move(*out[i]));
    }
    return scripts;
}

std::size_t CorpusStats::label_total() const {
    std::size_t n = 0;
    for (const auto& [t, c] : per_type) n += c;
    return n;
}

CorpusStats corpus_stats(const std::vector<ConversationScript>& scripts) {
    CorpusStats s;
    for (auto t : kAllInterruptTypes) s.per_type[to_char(t)] = 0;
    for (const auto& script : scripts) {
        ++s.conversations;
        s.rounds += script.rounds.size();
        for (const auto& r : script.rounds) {
            for (const auto& i : r.interruptions) {
                ++s.interruptions;
                if (i.types.size() > 1) ++s.dual_labelled;
                for (auto t : i.types) ++s.per_type[to_char(t)];
            }
        }
    }
    return s;
}

std::string format_corpus_stats(const CorpusStats& s) {
    std::string out = "| # Convs |";
    std::string rule = "|---:|";
    std::string row = "| " + std::to_string(s.conversations) + " |";
    for (auto t : kAllInterruptTypes) {
        const char c = to_char(t);
        out += std::string(" # ") + c + " |";
        rule += "---:|";
        const auto it = s.per_type.find(c);
        row += " " + std::to_string(it == s.per_type.end() ? 0 : it->second) + " |";
    }
    out += " # Total Int |\n";
    rule += "---:|\n";
    row += " " + std::to_string(s.interruptions) + " |\n";
    return out + rule + row;
}

} // namespace fdh
