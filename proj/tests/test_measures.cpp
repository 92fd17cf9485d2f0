#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "vibrancy/errors.hpp"
#include "vibrancy/measures.hpp"
#include "vibrancy/rng.hpp"

using namespace vibrancy;
using namespace vibrancy::measures;

TEST_CASE("event classification follows the category lists") {
    const auto tax = EventTaxonomy::defaults();
    CHECK(tax.classify("4th of July") == EventCategory::Regular);
    CHECK(tax.classify("Labor Day") == EventCategory::Regular);
    CHECK(tax.classify("Church Service") == EventCategory::Regular);
    CHECK(tax.classify("Birthday Party") == EventCategory::Spontaneous);
    CHECK(tax.classify("National Night Out") == EventCategory::Spontaneous);
    // Case-insensitive on trimmed input.
    CHECK(tax.classify("  birthday party ") == EventCategory::Spontaneous);
    CHECK_THROWS_WITH_AS(tax.classify("Block Bash"), doctest::Contains("Block Bash"),
                         InvalidInput);
}

TEST_CASE("whitelists load from the editable JSON configs") {
    test_helpers::TempDir dir("tax");
    const auto events = dir.file("events.json", R"({
        "public_holiday": ["Solstice Fest"], "religious": [],
        "community": ["Street Cleanup"], "personal": ["Housewarming"]})");
    const auto tax = EventTaxonomy::from_json_file(events);
    CHECK(tax.classify("Solstice Fest") == EventCategory::Regular);
    CHECK(tax.classify("housewarming") == EventCategory::Spontaneous);
    CHECK_THROWS_AS(tax.classify("4th of July"), InvalidInput);  // not in this whitelist

    const auto crimes = dir.file("crimes.json", R"({
        "violent": ["Mugging"], "nonviolent": ["Shoplifting"],
        "vice": ["Bootlegging"], "other": ["Loitering"]})");
    const auto crime_tax = CrimeTaxonomy::from_json_file(crimes);
    CHECK(crime_tax.classify("Mugging") == CrimeCategory::Violent);
    CHECK(crime_tax.classify("Loitering") == CrimeCategory::Other);

    const auto broken = dir.file("broken.json", R"({"violent": []})");
    CHECK_THROWS_AS(CrimeTaxonomy::from_json_file(broken), ParseError);
}

TEST_CASE("crime classification follows the UCR-style mapping") {
    const auto tax = CrimeTaxonomy::defaults();
    CHECK(tax.classify("Homicide") == CrimeCategory::Violent);
    CHECK(tax.classify("Aggravated Assault") == CrimeCategory::Violent);
    CHECK(tax.classify("Burglary") == CrimeCategory::NonViolent);
    CHECK(tax.classify("Motor Vehicle Theft") == CrimeCategory::NonViolent);
    CHECK(tax.classify("Gambling") == CrimeCategory::Vice);
    CHECK(tax.classify("Vandalism") == CrimeCategory::Other);
    CHECK_THROWS_AS(tax.classify("Jaywalking"), InvalidInput);
}

namespace {

PointEvent event_on(const Date& date, const std::string& type, EventKind kind) {
    PointEvent ev;
    ev.date = date;
    ev.raw_type = type;
    ev.kind = kind;
    return ev;
}

NeighborhoodProfile profile_of(const std::string& id) {
    NeighborhoodProfile p;
    p.blockgroup_id = id;
    p.prop_white = 1.0;
    p.mean_income = 40000;
    p.population = 900;
    return p;
}

const DateWindow kPermitWindow{Date{2006, 1, 1}, Date{2016, 5, 31}};
const DateWindow kCrimeWindow{Date{2006, 1, 1}, Date{2015, 12, 31}};

}  // namespace

TEST_CASE("measure table aggregates counts, proportions and logs") {
    std::vector<PointEvent> permits;
    std::vector<std::optional<std::string>> permit_assignment;
    // 92 spontaneous + 8 regular in block group A.
    for (int i = 0; i < 92; ++i) {
        permits.push_back(event_on(Date{2010, 6, 1 + i % 28}, "Birthday Party",
                                   EventKind::Permit));
        permit_assignment.push_back("A");
    }
    for (int i = 0; i < 8; ++i) {
        permits.push_back(event_on(Date{2010, 7, 4}, "4th of July", EventKind::Permit));
        permit_assignment.push_back("A");
    }
    // One unassigned permit must be dropped with a count.
    permits.push_back(event_on(Date{2011, 5, 5}, "Prom", EventKind::Permit));
    permit_assignment.push_back(std::nullopt);

    std::vector<PointEvent> crimes = {
        event_on(Date{2009, 3, 10}, "Burglary", EventKind::Crime),
        event_on(Date{2009, 4, 11}, "Homicide", EventKind::Crime),
        event_on(Date{2010, 5, 12}, "Gambling", EventKind::Crime),
        event_on(Date{2010, 5, 13}, "Vandalism", EventKind::Crime),
    };
    std::vector<std::optional<std::string>> crime_assignment = {"A", "A", "A", "A"};

    const auto table = build_measure_table(permits, permit_assignment, crimes, crime_assignment,
                                           {profile_of("A"), profile_of("B")},
                                           EventTaxonomy::defaults(), CrimeTaxonomy::defaults(),
                                           kPermitWindow, kCrimeWindow);
    REQUIRE(table.rows.size() == 2);
    const auto* a = table.find("A");
    REQUIRE(a != nullptr);
    CHECK(a->n_events == 100);
    CHECK(a->n_spontaneous == 92);
    CHECK(a->n_regular == 8);
    CHECK(a->n_spontaneous + a->n_regular == a->n_events);
    CHECK(*a->spontaneous_proportion == doctest::Approx(0.92));
    CHECK(a->crime_total == 4);
    CHECK(a->crime_violent == 1);
    CHECK(a->crime_nonviolent == 1);
    CHECK(a->crime_vice == 1);
    CHECK(a->crime_violent + a->crime_nonviolent + a->crime_vice <= a->crime_total);
    CHECK(*a->log_crime_total == doctest::Approx(std::log(4.0)));
    CHECK(a->yearly_events.at(2010) == 100);
    CHECK(a->yearly_events.at(2006) == 0);  // zero-filled missing years
    CHECK(a->monthly_events.at({2010, 7}) == 8);

    // Zero-event block group: proportion and log crime undefined.
    const auto* b = table.find("B");
    REQUIRE(b != nullptr);
    CHECK(b->n_events == 0);
    CHECK_FALSE(b->spontaneous_proportion.has_value());
    CHECK_FALSE(b->log_crime_total.has_value());

    CHECK(table.dropped_unassigned_events == 1);
    // Conservation: assigned events all land somewhere.
    std::int64_t total = 0;
    for (const auto& row : table.rows) total += row.n_events;
    CHECK(total == 100);
}

TEST_CASE("doubling every event leaves the spontaneous proportion unchanged") {
    std::vector<PointEvent> permits;
    std::vector<std::optional<std::string>> assignment;
    Rng rng(4);
    for (int i = 0; i < 60; ++i) {
        const bool spont = rng.bernoulli(0.7);
        permits.push_back(event_on(Date{2008, 2, 1 + i % 28},
                                   spont ? "Health Fair" : "Communion", EventKind::Permit));
        assignment.push_back("A");
    }
    const auto once = build_measure_table(permits, assignment, {}, {}, {profile_of("A")},
                                          EventTaxonomy::defaults(), CrimeTaxonomy::defaults(),
                                          kPermitWindow, kCrimeWindow);
    std::vector<PointEvent> doubled = permits;
    doubled.insert(doubled.end(), permits.begin(), permits.end());
    std::vector<std::optional<std::string>> doubled_assignment(doubled.size(), "A");
    const auto twice = build_measure_table(doubled, doubled_assignment, {}, {}, {profile_of("A")},
                                           EventTaxonomy::defaults(), CrimeTaxonomy::defaults(),
                                           kPermitWindow, kCrimeWindow);
    CHECK(twice.rows[0].n_events == 2 * once.rows[0].n_events);
    CHECK(*twice.rows[0].spontaneous_proportion ==
          doctest::Approx(*once.rows[0].spontaneous_proportion));
}

TEST_CASE("permuting input order changes no output") {
    std::vector<PointEvent> permits;
    std::vector<std::optional<std::string>> assignment;
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const std::string bg = rng.bernoulli(0.5) ? "A" : "B";
        permits.push_back(event_on(Date{2007 + static_cast<int>(rng.uniform_index(5)),
                                        1 + static_cast<int>(rng.uniform_index(12)), 5},
                                   rng.bernoulli(0.9) ? "Serenade" : "May Day",
                                   EventKind::Permit));
        assignment.push_back(bg);
    }
    const auto forward = build_measure_table(permits, assignment, {}, {},
                                             {profile_of("A"), profile_of("B")},
                                             EventTaxonomy::defaults(), CrimeTaxonomy::defaults(),
                                             kPermitWindow, kCrimeWindow);
    std::vector<PointEvent> shuffled = permits;
    std::vector<std::optional<std::string>> shuffled_assignment = assignment;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(shuffled[i - 1], shuffled[j]);
        std::swap(shuffled_assignment[i - 1], shuffled_assignment[j]);
    }
    const auto permuted = build_measure_table(shuffled, shuffled_assignment, {}, {},
                                              {profile_of("A"), profile_of("B")},
                                              EventTaxonomy::defaults(),
                                              CrimeTaxonomy::defaults(), kPermitWindow,
                                              kCrimeWindow);
    for (std::size_t r = 0; r < forward.rows.size(); ++r) {
        CHECK(forward.rows[r].n_events == permuted.rows[r].n_events);
        CHECK(forward.rows[r].n_spontaneous == permuted.rows[r].n_spontaneous);
        CHECK(forward.rows[r].yearly_events == permuted.rows[r].yearly_events);
    }
}

TEST_CASE("yearly series zero-fills the window and counts per year") {
    std::vector<PointEvent> events;
    for (int i = 0; i < 7; ++i) events.push_back(event_on(Date{2010, 3, 1}, "x", EventKind::Crime));
    const auto series = yearly_series(events, nullptr, kCrimeWindow);
    CHECK(series.size() == 10);
    CHECK(series.at(2010) == 7);
    CHECK(series.at(2006) == 0);
    CHECK(series.at(2015) == 0);

    const auto empty = yearly_series({}, nullptr, kCrimeWindow);
    for (const auto& [year, count] : empty) {
        (void)year;
        CHECK(count == 0);
    }
}

TEST_CASE("yearly series matches a decaying-intensity generator within 3 sigma") {
    Rng rng(2024);
    std::vector<PointEvent> events;
    std::map<int, double> expected;
    for (int year = 2006; year <= 2015; ++year) {
        const double lambda = 400.0 * std::exp(-0.15 * (year - 2006));
        expected[year] = lambda;
        const std::int64_t n = rng.poisson(lambda);
        for (std::int64_t i = 0; i < n; ++i) {
            events.push_back(event_on(Date{year, 6, 15}, "x", EventKind::Crime));
        }
    }
    const auto series = yearly_series(events, nullptr, kCrimeWindow);
    for (const auto& [year, lambda] : expected) {
        CHECK(std::fabs(series.at(year) - lambda) <= 3.0 * std::sqrt(lambda));
    }
}

TEST_CASE("complete_years trims partial first/last years") {
    const auto years = complete_years(kPermitWindow);  // ends 2016-05-31
    CHECK(years.front() == 2006);
    CHECK(years.back() == 2015);
    CHECK(std::find(years.begin(), years.end(), 2016) == years.end());
}

TEST_CASE("correlation matrix: exact affine dependence and hand-computed fixture") {
    const std::vector<double> x = {1, 2, 3, 4};
    std::vector<double> y = {5, 7, 9, 11};  // y = 2x + 3
    auto corr = correlation_matrix({"x", "y"}, {x, y});
    CHECK(corr.r[0][1] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> neg = {-1, -2, -3, -4};
    corr = correlation_matrix({"x", "y"}, {x, neg});
    CHECK(corr.r[0][1] == doctest::Approx(-1.0).epsilon(1e-12));

    // Pearson by hand: x={1,2,3,4}, y={1,3,2,4} -> r = 0.8.
    corr = correlation_matrix({"x", "y"}, {x, {1, 3, 2, 4}});
    CHECK(corr.r[0][1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(corr.r[1][0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(corr.r[0][0] == 1.0);
}

TEST_CASE("correlation matrix: constant columns undefined, |r| bounded, symmetric") {
    Rng rng(31);
    std::vector<double> a, b, c;
    for (int i = 0; i < 200; ++i) {
        const double z = rng.normal();
        a.push_back(z);
        b.push_back(0.5 * z + rng.normal());
        c.push_back(7.0);  // constant
    }
    const auto corr = correlation_matrix({"a", "b", "c"}, {a, b, c});
    CHECK(std::isnan(corr.r[0][2]));
    CHECK(std::isnan(corr.r[2][1]));
    CHECK(corr.r[2][2] == 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (!std::isnan(corr.r[i][j])) {
                CHECK(std::fabs(corr.r[i][j]) <= 1.0 + 1e-12);
                CHECK(corr.r[i][j] == corr.r[j][i]);
            }
        }
    }
}
