#include "fdh/judge.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <thread>

#include "fdh/hash.hpp"
#include "fdh/http.hpp"
#include "fdh/prompts.hpp"

namespace fdh {

using nlohmann::json;

std::array<double, 6> SubjectiveScore::values() const {
    return {relevance, encouragement, simplicity, flexibility, practicality, creativity};
}

double SubjectiveScore::mean() const {
    const auto v = values();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool SubjectiveScore::in_range() const {
    for (double v : values())
        if (!(v >= 1.0 && v <= 10.0)) return false;
    return true;
}

json to_json(const SubjectiveScore& s) {
    json j;
    const auto v = s.values();
    for (std::size_t i = 0; i < v.size(); ++i) j[SubjectiveScore::kDimensions[i]] = v[i];
    return j;
}

SubjectiveScore subjective_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("judge reply is not a JSON object");
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const char* dim = SubjectiveScore::kDimensions[i];
        if (!j.contains(dim) || !j[dim].is_number()) throw ParseError(std::string("missing numeric '") + dim + "'");
        v[i] = j[dim].get<double>();
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

std::string request_key(const ChatRequest& r) {
    const json j{{"model", r.model}, {"prompt", r.prompt}, {"temperature", r.temperature},
                 {"json_output", r.json_output}};
    return sha256_hex(j.dump());
}

OpenAiChatClient::OpenAiChatClient(std::string base_url, std::string api_key_env)
    : base_url_(std::move(base_url)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (const char* key = std::getenv(api_key_env.c_str())) api_key_ = key;
}

std::string OpenAiChatClient::complete(const ChatRequest& request) {
    json body{{"model", request.model},
              {"temperature", request.temperature},
              {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    if (request.json_output) body["response_format"] = {{"type", "json_object"}};
    std::map<std::string, std::string> headers;
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;
    const auto resp = http_post(base_url_ + "/chat/completions", body.dump(), "application/json", headers);
    try {
        return json::parse(resp.body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ServiceError(std::string("chat completion reply not understood: ") + e.what(), true);
    }
}

ReplayChatClient::ReplayChatClient(std::filesystem::path path, ChatClient* upstream)
    : path_(std::move(path)), upstream_(upstream), table_(json::object()) {
    std::ifstream in(path_);
    if (!in) {
        if (!upstream_) throw InvalidArgument("replay file not found: " + path_.string());
        return;
    }
    try {
        table_ = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path_.string() + ": " + e.what());
    }
    if (!table_.is_object()) throw ParseError(path_.string() + ": expected a JSON object");
}

std::string ReplayChatClient::complete(const ChatRequest& request) {
    const auto key = request_key(request);
    std::unique_lock lock(mu_);
    const json* hit = nullptr;
    std::string slot = key;
    if (table_.contains(key)) {
        hit = &table_[key];
    } else if (table_.contains("*")) {
        hit = &table_["*"];
        slot = "*";
    }
    if (hit) {
        if (hit->is_string()) return hit->get<std::string>();
        if (hit->is_array() && !hit->empty()) {
            auto& pos = cursor_[slot];
            const auto& v = (*hit)[std::min(pos, hit->size() - 1)];
            ++pos;
            return v.is_string() ? v.get<std::string>() : v.dump();
        }
        return hit->dump();
    }
    if (!upstream_) throw ServiceError("no recorded response for request " + key, false);

    lock.unlock();
    auto answer = upstream_->complete(request);
    lock.lock();
    table_[key] = answer;
    std::ofstream out(path_, std::ios::trunc);
    out << table_.dump(2) << '\n';
    return answer;
}

namespace {

std::string substitute(std::string text, std::string_view name, std::string_view value) {
    const std::string token = "{{" + std::string(name) + "}}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + value.size()))
        text.replace(pos, token.size(), value);
    return text;
}

// Judges sometimes wrap the object in prose or code fences.
json extract_object(const std::string& text) {
    const auto b = text.find('{');
    const auto e = text.rfind('}');
    if (b == std::string::npos || e == std::string::npos || e < b) throw ParseError("no JSON object in reply");
    try {
        return json::parse(text.substr(b, e - b + 1));
    } catch (const json::parse_error& ex) {
        throw ParseError(ex.what());
    }
}

} // namespace

std::string judge_prompt(std::string_view context, std::string_view reply) {
    return substitute(substitute(std::string(prompts::kJudgeV1), "context", context), "reply", reply);
}

SubjectiveScore score_reply(std::string_view context, std::string_view reply, ChatClient& client,
                            const JudgeOptions& opts) {
    const ChatRequest req{opts.model, judge_prompt(context, reply), opts.temperature, true};
    std::string last;
    for (int attempt = 0; attempt < std::max(1, opts.max_retries); ++attempt) {
        const auto answer = client.complete(req);
        try {
            const auto score = subjective_from_json(extract_object(answer));
            if (score.in_range()) return score;
            last = "score outside [1, 10]";
        } catch (const ParseError& e) {
            last = e.what();
        }
    }
    throw ScoringFailure("judge gave no usable score after " + std::to_string(opts.max_retries) +
                         " attempts: " + last);
}

ScoringBatch score_replies(const std::vector<ReplyToScore>& items, ChatClient& client,
                           const JudgeOptions& opts, int max_in_flight) {
    ScoringBatch batch;
    batch.scores.resize(items.size());
    std::vector<std::string> reasons(items.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                batch.scores[i] = score_reply(items[i].context, items[i].reply, client, opts);
            } catch (const Error& e) {
                reasons[i] = e.what();
            }
        }
    };
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, max_in_flight)), items.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!batch.scores[i]) {
            ++batch.failures;
            batch.failure_reasons.push_back("reply " + std::to_string(i) + ": " + reasons[i]);
        }
    }
    return batch;
}

double conditioned_ppl(std::span<const double> reply_logprobs) {
    if (reply_logprobs.empty()) throw UndefinedMetricError("c-PPL undefined: reply has no tokens");
    const double sum = std::accumulate(reply_logprobs.begin(), reply_logprobs.end(), 0.0);
    return std::exp(-sum / static_cast<double>(reply_logprobs.size()));
}

namespace {

json logprob_request(const std::vector<std::string>& context, const std::vector<std::string>& reply) {
    return {{"context", context}, {"reply", reply}};
}

std::vector<double> logprobs_from(const json& j) {
    try {
        return j.at("logprobs").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ServiceError(std::string("logprob reply not understood: ") + e.what(), false);
    }
}

} // namespace

std::vector<double> ServiceLogprobClient::reply_logprobs(const std::vector<std::string>& context,
                                                         const std::vector<std::string>& reply) {
    const auto resp = http_post(url_, logprob_request(context, reply).dump(), "application/json");
    try {
        return logprobs_from(json::parse(resp.body));
    } catch (const json::parse_error& e) {
        throw ServiceError(std::string("logprob service returned invalid JSON: ") + e.what(), true);
    }
}

ReplayLogprobClient::ReplayLogprobClient(std::filesystem::path path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("replay file not found: " + path.string());
    try {
        table_ = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string ReplayLogprobClient::key(const std::vector<std::string>& context,
                                     const std::vector<std::string>& reply) {
    return sha256_hex(logprob_request(context, reply).dump());
}

std::vector<double> ReplayLogprobClient::reply_logprobs(const std::vector<std::string>& context,
                                                        const std::vector<std::string>& reply) {
    const auto k = key(context, reply);
    if (!table_.contains(k)) throw ServiceError("no recorded logprobs for request " + k, false);
    return logprobs_from(json{{"logprobs", table_[k]}});
}

double conditioned_ppl(const std::vector<std::string>& context, const std::vector<std::string>& reply,
                       LogprobClient& lm) {
    if (reply.empty()) throw UndefinedMetricError("c-PPL undefined: reply has no tokens");
    const auto lp = lm.reply_logprobs(context, reply);
    if (lp.size() != reply.size()) {
        throw ServiceError("logprob count " + std::to_string(lp.size()) + " does not match " +
                               std::to_string(reply.size()) + " reply tokens",
                           false);
    }
    return conditioned_ppl(std::span<const double>(lp));
}

} // namespace fdh
