#include "spsim/response_codec.hpp"

#include <doctest.h>

#include <random>

using namespace spsim;

TEST_SUITE_BEGIN("response_codec");

TEST_CASE("the documented example output parses as valid") {
    const std::string raw =
        R"({"Explanation": "Explanation text here", "Choice": 2, "Ignored":["part1","part2"]})";
    SimResponse r = parse_response(raw, true);
    CHECK(r.status == ResponseStatus::valid);
    CHECK(*r.choice == 2);
    CHECK(*r.explanation == "Explanation text here");
    CHECK(r.ignored_raw == std::vector<std::string>{"part1", "part2"});
    CHECK(r.raw_text == raw);
}

TEST_CASE("status classification follows the documented rules") {
    CHECK(parse_response("no json here at all", true).status == ResponseStatus::invalid_format);
    CHECK(parse_response("", true).status == ResponseStatus::invalid_format);
    CHECK(parse_response("{\"Choice\": 2", true).status == ResponseStatus::invalid_format);

    CHECK(parse_response(R"({"Explanation":"x","Choice":4})", true).status ==
          ResponseStatus::invalid_choice);
    CHECK(parse_response(R"({"Explanation":"x","Choice":0})", true).status ==
          ResponseStatus::invalid_choice);
    CHECK(parse_response(R"({"Explanation":"x"})", true).status == ResponseStatus::invalid_choice);
    CHECK(parse_response(R"({"Explanation":"x","Choice":null})", true).status ==
          ResponseStatus::invalid_choice);

    // wrong shapes on present keys
    CHECK(parse_response(R"({"Explanation":"x","Choice":"two"})", true).status ==
          ResponseStatus::inconsistent_schema);
    CHECK(parse_response(R"({"Explanation":7,"Choice":2})", true).status ==
          ResponseStatus::inconsistent_schema);
    CHECK(parse_response(R"({"Explanation":"x","Choice":2,"Ignored":"none"})", true).status ==
          ResponseStatus::inconsistent_schema);
    // required explanation missing
    CHECK(parse_response(R"({"Choice":2})", true).status == ResponseStatus::inconsistent_schema);
    // ... but fine when not required
    CHECK(parse_response(R"({"Choice":2})", false).status == ResponseStatus::valid);
}

TEST_CASE("choices embedded in prose or fences are salvaged") {
    SimResponse r = parse_response(
        "Sure! Here is my answer:\n```json\n{\"Choice\": 3, \"Ignored\": []}\n```\nhope that "
        "helps",
        false);
    CHECK(r.status == ResponseStatus::valid);
    CHECK(*r.choice == 3);

    // stringified digits coerce
    SimResponse s = parse_response(R"({"Explanation":"ok","Choice":"2","Ignored":[]})", true);
    CHECK(s.status == ResponseStatus::valid);
    CHECK(*s.choice == 2);

    // a broken first object does not stop the scan
    SimResponse t = parse_response("{oops} then {\"Choice\": 1}", false);
    CHECK(t.status == ResponseStatus::valid);
    CHECK(*t.choice == 1);
}

TEST_CASE("non-valid responses carry no choice") {
    for (const char* raw :
         {"{\"Choice\": 9}", "{\"Choice\": \"x\"}", "nope", "{\"Explanation\":\"e\"}"}) {
        SimResponse r = parse_response(raw, true);
        CHECK(r.status != ResponseStatus::valid);
        CHECK_FALSE(r.choice.has_value());
    }
}

TEST_CASE("parsing a valid response's serialization returns an equal response") {
    const std::string raw =
        R"({"Explanation": "cheapest option", "Choice": 1, "Ignored": ["Your previous choices"]})";
    SimResponse a = parse_response(raw, true);
    REQUIRE(a.status == ResponseStatus::valid);
    const ojson again = {{"Explanation", *a.explanation},
                         {"Choice", *a.choice},
                         {"Ignored", a.ignored_raw}};
    SimResponse b = parse_response(again.dump(), true);
    CHECK(b.status == a.status);
    CHECK(b.choice == a.choice);
    CHECK(b.explanation == a.explanation);
    CHECK(b.ignored_raw == a.ignored_raw);
    CHECK(b.ignored_canonical == a.ignored_canonical);
}

TEST_CASE("ignored labels map onto the factor buckets") {
    CHECK(canonicalize_ignored({"Your previous choices"}) ==
          FactorCounts{{FactorBucket::SPC, 1}});
    CHECK(canonicalize_ignored({"Your personality and attitudes", "income level"}) ==
          FactorCounts{{FactorBucket::SD, 1}, {FactorBucket::ST, 1}});
    CHECK(canonicalize_ignored({}).empty());
    CHECK(canonicalize_ignored({"the moon phase"}) == FactorCounts{{FactorBucket::OTHER, 1}});
    // first matching rule wins in SPC, SD, ST order
    CHECK(canonicalize_ignored({"previous choices and demographics"}) ==
          FactorCounts{{FactorBucket::SPC, 1}});
}

TEST_CASE("canonicalization is order-insensitive and count-preserving") {
    std::vector<std::string> items = {"income", "Your previous choices", "lifestyle",
                                      "something else", "education history"};
    auto a = canonicalize_ignored(items);
    std::reverse(items.begin(), items.end());
    auto b = canonicalize_ignored(items);
    CHECK(a == b);
    int total = 0;
    for (const auto& [bucket, n] : a) total += n;
    CHECK(total == 5);
}

TEST_CASE("keyword tables load from configuration") {
    IgnoredKeywordTable table = IgnoredKeywordTable::from_json(
        ojson{{"SPC", ojson::array({"history"})}, {"SD", ojson::array({"postcode"})}});
    CHECK(canonicalize_ignored_item("choice history", table) == FactorBucket::SPC);
    CHECK(canonicalize_ignored_item("my postcode", table) == FactorBucket::SD);
    // ST keywords untouched by the partial override
    CHECK(canonicalize_ignored_item("personality", table) == FactorBucket::ST);
    CHECK(canonicalize_ignored_item("income", table) == FactorBucket::OTHER);
}

TEST_CASE("the parser is total over fuzzed byte strings") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        std::string raw;
        const size_t len = rng() % 200;
        for (size_t k = 0; k < len; ++k)
            raw.push_back(static_cast<char>(rng() % 256));
        SimResponse r = parse_response(raw, rng() % 2 == 0);  // must not throw
        CHECK((r.status == ResponseStatus::valid || r.status == ResponseStatus::invalid_format ||
               r.status == ResponseStatus::invalid_choice ||
               r.status == ResponseStatus::inconsistent_schema));
        if (r.status != ResponseStatus::valid) CHECK_FALSE(r.choice.has_value());
    }
}

TEST_SUITE_END();
