#include "spsim/heating_survey.hpp"
#include "spsim/survey_data.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace spsim;

TEST_SUITE_BEGIN("survey_data");

static Dataset fixture() { return load_dataset(spsim_test::fixture_path("heating_survey_sample.json")); }

TEST_CASE("fixture loads with all designs and respondents") {
    Dataset ds = fixture();
    CHECK(ds.respondents.size() == 3);
    CHECK(ds.designs.size() == 3);
    CHECK(validate_dataset(ds).empty());
}

TEST_CASE("display strings parse to magnitudes") {
    CHECK(*parse_display_number("£ 1900") == doctest::Approx(1900.0));
    CHECK(*parse_display_number("£ 3600 (£ 300 per month)") == doctest::Approx(3600.0));
    CHECK(*parse_display_number("4590 kg per year (26 flight(s))") == doctest::Approx(4590.0));
    CHECK(*parse_display_number("1 per year") == doctest::Approx(1.0));
    CHECK(*parse_display_number("£ 25 (Over 1 year(s))") == doctest::Approx(25.0));
    CHECK(*parse_display_number("4 year(s)") == doctest::Approx(4.0));
    CHECK(*parse_display_number("£ 1,900") == doctest::Approx(1900.0));
    CHECK_FALSE(parse_display_number("None").has_value());
    CHECK_FALSE(parse_display_number("Interest-free loan").has_value());
}

TEST_CASE("monetary strings of the form £ N parse to exactly N") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const long n = static_cast<long>(rng() % 1000000);
        const std::string display = "£ " + std::to_string(n);
        REQUIRE(parse_display_number(display).has_value());
        CHECK(*parse_display_number(display) == doctest::Approx(static_cast<double>(n)));
    }
}

TEST_CASE("loaded attribute levels carry numeric or categorical codes") {
    Dataset ds = fixture();
    const auto& sc1 = ds.respondents[0].experiments.at(ExperimentId::SP1)[0];
    const auto& gas = sc1.options[0];
    CHECK(gas.attributes[0].numeric_value == doctest::Approx(1900.0));
    CHECK_FALSE(gas.attributes[0].categorical_code.has_value());
    CHECK(gas.attributes[2].categorical_code == "None");
    CHECK_FALSE(gas.attributes[2].numeric_value.has_value());
    CHECK(*sc1.recorded_choice == 2);  // positional mapping of the option name

    const auto& sp2_sc1 = ds.respondents[0].experiments.at(ExperimentId::SP2)[0];
    const auto& no_retrofit = sp2_sc1.options[0];
    CHECK_FALSE(no_retrofit.attributes[1].display_value.has_value());  // null retrofit cost
    CHECK_FALSE(no_retrofit.attributes[1].numeric_value.has_value());
    CHECK_FALSE(no_retrofit.attributes[1].categorical_code.has_value());
}

TEST_CASE("load after serialize is the identity") {
    Dataset ds = fixture();
    const ojson round = serialize_dataset(load_dataset_json(serialize_dataset(ds)));
    CHECK(round == serialize_dataset(ds));
    CHECK(dataset_digest(load_dataset_json(serialize_dataset(ds))) == dataset_digest(ds));
}

TEST_CASE("validation flags option-count, range and order violations") {
    Dataset ds = fixture();
    auto& sc = ds.respondents[0].experiments.at(ExperimentId::SP1)[2];
    sc.options.pop_back();
    auto violations = validate_dataset(ds);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].where.find("R001") != std::string::npos);
    CHECK(violations[0].where.find("SP1") != std::string::npos);
    CHECK(violations[0].where.find("3") != std::string::npos);

    Dataset ds2 = fixture();
    ds2.respondents[1].experiments.at(ExperimentId::SP2)[4].recorded_choice = 4;
    auto v2 = validate_dataset(ds2);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].message.find("out of range") != std::string::npos);

    Dataset ds3 = fixture();
    ds3.respondents[0].sociodem["age_0_5"] = -1;
    CHECK(validate_dataset(ds3).size() == 1);

    Dataset ds4 = fixture();
    ds4.respondents[2].id = "R001";
    CHECK_FALSE(validate_dataset(ds4).empty());
}

TEST_CASE("malformed files raise format errors naming the offender") {
    CHECK_THROWS_AS(load_dataset_json(ojson{{"respondents", ojson::array()}}), Error);
    ojson j = serialize_dataset(fixture());
    j["respondents"][0]["experiments"]["SP1"][0]["Choice"] = "Coal boiler";
    try {
        load_dataset_json(j);
        FAIL("expected a format error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find("Coal boiler") != std::string::npos);
        CHECK(std::string(e.what()).find("R001") != std::string::npos);
    }
}

TEST_CASE("income bands parse to bounds") {
    auto band = parse_income_band("£10,000-14,999");
    REQUIRE(band.has_value());
    CHECK(band->first == doctest::Approx(10000.0));
    CHECK(*band->second == doctest::Approx(14999.0));

    auto open = parse_income_band("£75,000 or more");
    REQUIRE(open.has_value());
    CHECK(open->first == doctest::Approx(75000.0));
    CHECK_FALSE(open->second.has_value());

    auto low = parse_income_band("Less than £10,000");
    REQUIRE(low.has_value());
    CHECK(low->first == doctest::Approx(0.0));
    CHECK(*low->second == doctest::Approx(9999.0));

    CHECK_FALSE(parse_income_band("prefer not to say").has_value());
}

TEST_CASE("stratification groups the fixture respondents") {
    Dataset ds = fixture();

    auto children = stratify(ds, StratifyCriterion::children);
    CHECK(children.groups[1].ids == std::vector<std::string>{"R001"});      // With-Children
    CHECK(children.groups[0].ids == std::vector<std::string>{"R002", "R003"});
    CHECK(children.excluded.empty());
    CHECK(children.groups[0].label == "Child-Free");
    CHECK(children.groups[1].label == "With-Children");

    auto seniors = stratify(ds, StratifyCriterion::seniors);
    CHECK(seniors.groups[1].ids == std::vector<std::string>{"R002"});
    CHECK(seniors.groups[0].ids == std::vector<std::string>{"R001", "R003"});

    auto income = stratify(ds, StratifyCriterion::income_25k);
    CHECK(income.groups[0].ids == std::vector<std::string>{"R001"});  // Low-income
    CHECK(income.groups[1].ids == std::vector<std::string>{"R002"});
    CHECK(income.excluded == std::vector<std::string>{"R003"});  // band missing
}

TEST_CASE("stratify partitions the respondent set for every criterion") {
    Dataset ds = fixture();
    for (auto criterion : {StratifyCriterion::children, StratifyCriterion::seniors,
                           StratifyCriterion::income_25k}) {
        auto res = stratify(ds, criterion);
        std::set<std::string> all;
        size_t total = 0;
        for (const auto& grp : res.groups) {
            all.insert(grp.ids.begin(), grp.ids.end());
            total += grp.ids.size();
        }
        all.insert(res.excluded.begin(), res.excluded.end());
        total += res.excluded.size();
        CHECK(total == ds.respondents.size());
        CHECK(all.size() == ds.respondents.size());
    }
}

TEST_CASE("straddling income bands go to excluded") {
    Dataset ds = fixture();
    ds.respondents[0].sociodem["income_band"] = "£20,000-29,999";
    auto income = stratify(ds, StratifyCriterion::income_25k);
    CHECK(std::find(income.excluded.begin(), income.excluded.end(), "R001") !=
          income.excluded.end());
}

TEST_CASE("encoding produces the documented design rows") {
    Dataset ds = fixture();
    const auto& design = ds.design(ExperimentId::SP1);
    const auto& sc1 = ds.respondents[0].experiments.at(ExperimentId::SP1)[0];
    EncodedScenario enc = encode_attributes(design, sc1);

    const std::vector<std::string> expected_names = {
        "asc2", "asc3", "fixed_cost", "operation_cost", "support_loan_4pct",
        "support_loan_interest_free", "maintenance_visits", "co2"};
    CHECK(enc.covariate_names == expected_names);

    auto check_row = [&](int j, std::vector<double> want) {
        REQUIRE(enc.x[size_t(j)].size() == want.size());
        for (size_t k = 0; k < want.size(); ++k)
            CHECK(enc.x[size_t(j)][k] == doctest::Approx(want[k]).epsilon(1e-12));
    };
    // gas boiler row: reference alternative, support None -> both dummies 0
    check_row(0, {0, 0, 1.9, 3.6, 0, 0, 1, 4.59});
    // hydrogen: asc2, 4% loan dummy
    check_row(1, {1, 0, 1.9, 6.6, 1, 0, 2, 1.0});
    // heat pump: asc3, interest-free dummy, £ 15300 -> 15.3
    check_row(2, {0, 1, 15.3, 1.68, 0, 1, 2, 0.0});
}

TEST_CASE("null display values encode to zero") {
    Dataset ds = fixture();
    const auto& design = ds.design(ExperimentId::SP2);
    const auto& sc1 = ds.respondents[0].experiments.at(ExperimentId::SP2)[0];
    EncodedScenario enc = encode_attributes(design, sc1);
    // no-retrofit row: retrofit cost and savings are null
    CHECK(enc.x[0][3] == 0.0);  // retrofit_cost
    CHECK(enc.x[0][5] == 0.0);  // savings
}

TEST_CASE("unknown categorical levels raise an encoding error naming the level") {
    Dataset ds = fixture();
    const auto& design = ds.design(ExperimentId::SP1);
    auto sc = ds.respondents[0].experiments.at(ExperimentId::SP1)[0];
    sc.options[0].attributes[2] =
        make_attribute_level(design, design.attribute_schema[2], "Grant of £5,000");
    try {
        encode_attributes(design, sc);
        FAIL("expected an encoding error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("Grant of £5,000") != std::string::npos);
    }
}

TEST_CASE("encoding is deterministic and dummy groups are at most one-hot") {
    Dataset ds = fixture();
    for (auto id : kAllExperiments) {
        if (ds.respondents[1].experiments.find(id) == ds.respondents[1].experiments.end())
            continue;
        const auto& design = ds.design(id);
        for (const auto& sc : ds.respondents[1].experiments.at(id)) {
            EncodedScenario a = encode_attributes(design, sc);
            EncodedScenario b = encode_attributes(design, sc);
            CHECK(a.x == b.x);
            // per categorical attribute, dummies sum to <= 1 per alternative
            for (int j = 0; j < 3; ++j) {
                size_t col = 2;
                for (const auto& coding : design.codings) {
                    if (coding.is_numeric) {
                        ++col;
                        continue;
                    }
                    double s = 0.0;
                    for (size_t l = 1; l < coding.levels.size(); ++l)
                        s += a.x[static_cast<size_t>(j)][col++];
                    CHECK(s <= 1.0);
                }
            }
        }
    }
}

TEST_SUITE_END();
