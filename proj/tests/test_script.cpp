#include "doctest.h"

#include "fdh/error.hpp"
#include "fdh/script.hpp"
#include "support.hpp"

using namespace fdh;
using nlohmann::json;

namespace {

json good_doc() {
    return json::parse(R"({
        "conversation_id": "c1", "topic": "cooking",
        "rounds": [
            {"user_text": "how do I boil an egg", "interruptions": [{"type": "F", "text": "how long"}]},
            {"user_text": "and poach one?", "interruptions": [{"type": "A+S", "text": "ok, what about toast"}]}
        ]})");
}

bool has_rule(const ValidationResult& v, const std::string& rule) {
    for (const auto& x : v.violations)
        if (x.rule.find(rule) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_SUITE("script") {

TEST_CASE("valid script parses and validates") {
    const auto v = validate_script_json(good_doc());
    CHECK(v.ok());
    const auto s = parse_script(good_doc());
    CHECK(s.rounds.size() == 2);
    REQUIRE(s.rounds[1].interruptions[0].types.size() == 2);
    CHECK(s.rounds[1].interruptions[0].types[0] == InterruptType::A);
    CHECK(s.rounds[1].interruptions[0].types[1] == InterruptType::S);
}

TEST_CASE("six rounds are rejected") {
    auto doc = good_doc();
    while (doc["rounds"].size() < 6) doc["rounds"].push_back({{"user_text", "more"}, {"interruptions", json::array()}});
    CHECK(has_rule(validate_script_json(doc), "rounds > 5"));
}

TEST_CASE("zero rounds are rejected") {
    auto doc = good_doc();
    doc["rounds"] = json::array();
    CHECK(has_rule(validate_script_json(doc), "rounds < 1"));
}

TEST_CASE("more than four interruptions are rejected") {
    auto doc = good_doc();
    for (int i = 0; i < 3; ++i) doc["rounds"][0]["interruptions"].push_back({{"type", "R"}, {"text", "again?"}});
    CHECK(has_rule(validate_script_json(doc), "interruptions > 4"));
}

TEST_CASE("unknown type letter is a violation, not a crash") {
    auto doc = good_doc();
    doc["rounds"][0]["interruptions"][0]["type"] = "X";
    const auto v = validate_script_json(doc);
    CHECK(has_rule(v, "unknown interruption type 'X'"));
    CHECK_FALSE(has_rule(v, "missing interruption type"));
}

TEST_CASE("empty user text is rejected") {
    auto doc = good_doc();
    doc["rounds"][1]["user_text"] = "   ";
    CHECK(has_rule(validate_script_json(doc), "empty user_text"));
}

TEST_CASE("duplicate and excess labels are rejected") {
    auto s = parse_script(good_doc());
    s.rounds[0].interruptions[0].types = {InterruptType::F, InterruptType::F};
    CHECK(has_rule(validate_script(s), "duplicate type label"));
    s.rounds[0].interruptions[0].types = {InterruptType::A, InterruptType::F, InterruptType::S};
    CHECK(has_rule(validate_script(s), "more than 2 type labels"));
}

TEST_CASE("malformed documents throw ParseError") {
    CHECK_THROWS_AS(parse_script_text("{not json"), ParseError);
    CHECK_THROWS_AS(parse_script(json::parse(R"({"topic": "x", "rounds": []})")), ParseError);
    CHECK_THROWS_AS(parse_script(json::parse(R"({"conversation_id": "x", "rounds": 3})")), ParseError);
}

TEST_CASE("json round trip") {
    const auto s = parse_script(good_doc());
    const auto back = parse_script(to_json(s));
    CHECK(to_json(back) == to_json(s));
}

TEST_CASE("utterances follow conversational order") {
    const auto u = user_utterances(test::sample_script());
    REQUIRE(u.size() == 4);
    CHECK_FALSE(u[0].is_interrupt);
    CHECK(u[1].is_interrupt);
    CHECK(u[1].types == std::vector<InterruptType>{InterruptType::F});
    CHECK_FALSE(u[2].is_interrupt);
    CHECK(u[3].types.size() == 2);
}

}
