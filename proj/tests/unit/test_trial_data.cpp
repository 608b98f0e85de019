#include <sstream>

#include "doctest.h"
#include "pmrm/errors.hpp"
#include "pmrm/trial_data.hpp"

using namespace pmrm;

namespace {

const VisitSchedule kFourVisits({0.0, 28.0, 52.0, 80.0});

TrialDataset parse(const std::string& text, const VisitSchedule& schedule = kFourVisits,
                   TimeMode mode = TimeMode::scheduled) {
  std::istringstream in(text);
  return read_long_csv(in, schedule, mode);
}

}  // namespace

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(VisitSchedule({0.0}), ValidationError);
  CHECK_THROWS_AS(VisitSchedule({1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(VisitSchedule({0.0, 2.0, 2.0}), ValidationError);
  const auto s = VisitSchedule::parse("0, 6 12,18");
  CHECK(s.size() == 4);
  CHECK(s.post_baseline() == 3);
  CHECK(s.visit_at(12.0) == 2);
  CHECK_FALSE(s.visit_at(13.0).has_value());
}

TEST_CASE("complete two-subject file round-trips") {
  const std::string text =
      "subject_id,arm,group,visit,time,value\n"
      "s1,placebo,,0,0,5\ns1,placebo,,1,28,6\ns1,placebo,,2,52,7\n"
      "s2,active,,0,0,4\ns2,active,,1,28,4.5\ns2,active,,2,52,5\n";
  const VisitSchedule three({0.0, 28.0, 52.0});
  const auto data = parse(text, three);
  CHECK(data.n_subjects() == 2);
  CHECK(data.n_observations() == 6);
  CHECK(data.n_in_arm(Arm::active) == 1);

  std::ostringstream out;
  write_long_csv(out, data);
  const auto again = parse(out.str(), three);
  REQUIRE(again.n_subjects() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = data.subjects()[i];
    const auto& b = again.subjects()[i];
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.arm == b.arm);
    REQUIRE(a.observations.size() == b.observations.size());
    for (std::size_t k = 0; k < a.observations.size(); ++k) {
      CHECK(a.observations[k].value == b.observations[k].value);
    }
  }
}

TEST_CASE("missing rows and empty values leave gaps") {
  const std::string text =
      "subject_id,arm,group,visit,time,value\n"
      "s1,placebo,,0,0,5\ns1,placebo,,1,28,6\ns1,placebo,,3,80,8\n"
      "s2,active,,0,0,5\ns2,active,,1,28,\ns2,active,,2,52,7\ns2,active,,3,80,8\n";
  const auto data = parse(text);
  const auto rows = observed_rows(data.subjects()[0]);
  CHECK(rows.visits == std::vector<int>{0, 1, 3});
  CHECK(observed_rows(data.subjects()[1]).visits == std::vector<int>{0, 2, 3});
}

TEST_CASE("actual-time mode accepts subjects without baseline") {
  const std::string text =
      "subject_id,arm,group,visit,time,value\n"
      "s1,placebo,,1,27.5,6\ns1,placebo,,3,81,8\n"
      "s2,active,,0,0,5\ns2,active,,2,53,7\n";
  const auto data = parse(text, kFourVisits, TimeMode::actual);
  CHECK(observed_rows(data.subjects()[0]).visits == std::vector<int>{1, 3});
  CHECK_FALSE(data.subjects()[0].has_baseline());
  CHECK(observed_rows(data.subjects()[0]).times[0] == doctest::Approx(27.5));
  CHECK_THROWS_AS(parse(text, kFourVisits, TimeMode::scheduled), ValidationError);
}

TEST_CASE("malformed rows name their line") {
  const std::string bad_arm =
      "subject_id,arm,group,visit,time,value\n"
      "s1,placebo,,0,0,5\n"
      "s2,treatmnt,,0,0,5\n";
  try {
    parse(bad_arm);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("subject_id,arm,group,visit,time,value\ns1,placebo,,0,0,abc\n"),
                  ParseError);
  CHECK_THROWS_AS(parse("id,arm\n"), ParseError);
}

TEST_CASE("duplicate visits and empty subjects are rejected") {
  CHECK_THROWS_AS(parse("subject_id,arm,group,visit,time,value\n"
                        "s1,placebo,,0,0,5\ns1,placebo,,0,0,6\ns2,active,,0,0,5\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse("subject_id,arm,group,visit,time,value\n"
                        "s1,placebo,,0,0,5\ns2,active,,0,0,\n"),
                  ValidationError);
}

TEST_CASE("datasets need both arms, pools do not") {
  SubjectRecord s{"p1", Arm::placebo, std::nullopt, {{0, 0.0, 5.0}, {1, 28.0, 6.0}}};
  CHECK_THROWS_AS(TrialDataset(kFourVisits, {s}), ValidationError);
  const SubjectPool pool(kFourVisits, {s});
  CHECK(pool.size() == 1);
  CHECK_THROWS_AS(SubjectPool(kFourVisits, {}), ValidationError);
}

TEST_CASE("observations are sorted by visit") {
  SubjectRecord p{"p1", Arm::placebo, std::nullopt, {{2, 52.0, 7.0}, {0, 0.0, 5.0}}};
  SubjectRecord a{"a1", Arm::active, std::nullopt, {{0, 0.0, 5.0}}};
  const TrialDataset data(kFourVisits, {p, a});
  CHECK(data.subjects()[0].observations.front().visit == 0);
  CHECK(data.subjects()[0].observations.back().visit == 2);
}
