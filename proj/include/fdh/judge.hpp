#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "json.hpp"

namespace fdh {

struct SubjectiveScore {
    double relevance = 0, encouragement = 0, simplicity = 0;
    double flexibility = 0, practicality = 0, creativity = 0;

    static constexpr std::array<const char*, 6> kDimensions = {
        "relevance", "encouragement", "simplicity", "flexibility", "practicality", "creativity"};

    std::array<double, 6> values() const;
    double mean() const;
    bool in_range() const;  // every dimension within [1, 10]

    bool operator==(const SubjectiveScore&) const = default;
};

nlohmann::json to_json(const SubjectiveScore& s);
// Throws ParseError when a dimension is missing or not a number.
SubjectiveScore subjective_from_json(const nlohmann::json& j);

// The judge kept answering with something unusable.
class ScoringFailure : public Error {
public:
    using Error::Error;
};

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.2;
    bool json_output = true;
};

// Content hash identifying a request in replay files.
std::string request_key(const ChatRequest& r);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    // Returns the assistant message text. Throws ServiceError.
    virtual std::string complete(const ChatRequest& request) = 0;
};

// OpenAI-compatible chat completions endpoint. The API key is read from
// the named environment variable at construction; an unset variable sends
// no Authorization header.
class OpenAiChatClient : public ChatClient {
public:
    explicit OpenAiChatClient(std::string base_url, std::string api_key_env = "OPENAI_API_KEY");
    std::string complete(const ChatRequest& request) override;

private:
    std::string base_url_;
    std::string api_key_;
};

// Replays recorded responses. The file is a JSON object mapping
// request_key -> response; a list value is served one element per call and
// a "*" entry answers any request without its own key. With an upstream
// client, misses are forwarded and recorded back to the file.
class ReplayChatClient : public ChatClient {
public:
    explicit ReplayChatClient(std::filesystem::path path, ChatClient* upstream = nullptr);
    std::string complete(const ChatRequest& request) override;

private:
    std::filesystem::path path_;
    ChatClient* upstream_;
    std::mutex mu_;
    nlohmann::json table_;
    std::map<std::string, std::size_t> cursor_;
};

// Renders the judge prompt asset for one reply.
std::string judge_prompt(std::string_view context, std::string_view reply);

struct JudgeOptions {
    std::string model = "gpt-4o-2024-11-20";
    double temperature = 0.2;
    int max_retries = 3;
};

// Asks the judge for the six scores; unparseable or out-of-range answers
// are retried, and after max_retries attempts a ScoringFailure is thrown.
// ServiceError from the client propagates.
SubjectiveScore score_reply(std::string_view context, std::string_view reply, ChatClient& client,
                            const JudgeOptions& opts = {});

struct ReplyToScore {
    std::string context;
    std::string reply;
};

struct ScoringBatch {
    std::vector<std::optional<SubjectiveScore>> scores;  // same order as the input
    int failures = 0;
    std::vector<std::string> failure_reasons;
};

// Scores many replies with at most `max_in_flight` concurrent requests.
// Failures are tallied and leave an empty slot.
ScoringBatch score_replies(const std::vector<ReplyToScore>& items, ChatClient& client,
                           const JudgeOptions& opts = {}, int max_in_flight = 4);

// exp(-mean(logprobs)). Throws UndefinedMetricError for an empty reply.
double conditioned_ppl(std::span<const double> reply_logprobs);

class LogprobClient {
public:
    virtual ~LogprobClient() = default;
    // Log-probability of each reply token given the context and the reply
    // prefix before it.
    virtual std::vector<double> reply_logprobs(const std::vector<std::string>& context,
                                               const std::vector<std::string>& reply) = 0;
};

// POSTs {"context": [...], "reply": [...]} and expects {"logprobs": [...]}.
class ServiceLogprobClient : public LogprobClient {
public:
    explicit ServiceLogprobClient(std::string url) : url_(std::move(url)) {}
    std::vector<double> reply_logprobs(const std::vector<std::string>& context,
                                       const std::vector<std::string>& reply) override;

private:
    std::string url_;
};

// Replay file mapping the SHA-256 of the request body to a logprob list.
class ReplayLogprobClient : public LogprobClient {
public:
    explicit ReplayLogprobClient(std::filesystem::path path);
    std::vector<double> reply_logprobs(const std::vector<std::string>& context,
                                       const std::vector<std::string>& reply) override;
    static std::string key(const std::vector<std::string>& context, const std::vector<std::string>& reply);

private:
    nlohmann::json table_;
};

// Throws UndefinedMetricError when the reply has no tokens and
// ServiceError when the client returns the wrong number of logprobs.
double conditioned_ppl(const std::vector<std::string>& context, const std::vector<std::string>& reply,
                       LogprobClient& lm);

} // namespace fdh
