#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "doctest.h"

#include "gridsense/error.hpp"
#include "gridsense/fixtures.hpp"
#include "gridsense/matpower.hpp"
#include "test_support.hpp"

using namespace gridsense;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    validate_case(parse_case(text));
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Config;
}

const std::string kBus1 = "\t1\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n";
const std::string kBus2 = "\t2\t1\t50\t10\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n";
const std::string kLine12 = "\t1\t2\t0\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n";

}  // namespace

TEST_CASE("bundled fixtures match their declared in-service branch counts") {
  const std::map<std::string, std::pair<std::size_t, std::size_t>> expected{
      {"ieee9", {9, 9}},    {"ieee14", {14, 20}}, {"ieee30", {30, 41}},
      {"ieee39", {39, 46}}, {"ieee57", {57, 80}}, {"ieee118", {118, 186}}};
  CHECK(bundled_case_names().size() == expected.size());
  for (const auto& name : bundled_case_names()) {
    CAPTURE(name);
    const GridCase g = load_case(name);
    const auto declared = declared_branch_count(bundled_case_text(name));
    REQUIRE(declared.has_value());
    CHECK(g.n_branches == *declared);
    CHECK(g.n_buses == expected.at(name).first);
    CHECK(g.n_branches == expected.at(name).second);
    CHECK(g.buses[g.slack_bus].type == BusType::Slack);
  }
}

TEST_CASE("internal and external bus numbering form a bijection") {
  for (const auto& name : bundled_case_names()) {
    const GridCase g = load_case(name);
    std::set<int> ids;
    for (std::size_t i = 0; i < g.n_buses; ++i) {
      ids.insert(g.external_id(i));
      CHECK(g.internal_index(g.external_id(i)) == i);
    }
    CHECK(ids.size() == g.n_buses);
  }
}

TEST_CASE("unit conversion to per unit and radians") {
  const GridCase g = load_case("ieee14");
  const Bus& b2 = g.buses[g.internal_index(2)];
  CHECK(b2.p_demand == doctest::Approx(21.7 / 100.0));
  CHECK(b2.q_demand == doctest::Approx(12.7 / 100.0));
  const Bus& b9 = g.buses[g.internal_index(9)];
  CHECK(b9.shunt_b == doctest::Approx(19.0 / 100.0));
  CHECK(b2.v_ang_init == doctest::Approx(-4.98 * std::numbers::pi / 180.0));
  // transformer 4-7 has tap 0.978
  bool found = false;
  for (const auto& br : g.branches)
    if (g.external_id(br.from_bus) == 4 && g.external_id(br.to_bus) == 7) {
      CHECK(br.tap_ratio == doctest::Approx(0.978));
      found = true;
    }
  CHECK(found);
  // zero tap means nominal
  for (const auto& br : g.branches)
    if (g.external_id(br.from_bus) == 1 && g.external_id(br.to_bus) == 2) CHECK(br.tap_ratio == 1.0);
}

TEST_CASE("round trip through case text is exact") {
  for (const auto& name : bundled_case_names()) {
    CAPTURE(name);
    const GridCase g = load_case(name);
    const GridCase again = validate_case(parse_case(to_case_text(g)));
    CHECK(again == g);
  }
}

TEST_CASE("comments and quoted percent signs are ignored") {
  std::string text = test::two_bus_text(0.0, 0.1);
  text.insert(text.find("mpc.bus"), "mpc.note = 'load 50% of peak'; % trailing comment\n% mpc.bus = [ 9 9 ];\n");
  const GridCase g = test::from_text(text);
  CHECK(g.n_buses == 2);
  CHECK(g.n_branches == 1);
}

TEST_CASE("out-of-service branches are kept but not counted") {
  const std::string text = test::small_case_text(
      kBus1 + kBus2, kLine12 + "\t1\t2\t0\t0.2\t0\t0\t0\t0\t0\t0\t0\t-360\t360;\n");
  const GridCase g = test::from_text(text);
  CHECK(g.branches.size() == 2);
  CHECK(g.n_branches == 1);
  CHECK(g.in_service_branches() == std::vector<std::size_t>{0});
}

TEST_CASE("structural errors carry their kind") {
  using test::small_case_text;
  CHECK(kind_of("mpc.baseMVA = 100;\nmpc.bus = [\n" + kBus1 + "];\nmpc.gen = [\n];\n") == ErrorKind::MissingSection);
  CHECK(kind_of(small_case_text(kBus1 + kBus2, "\t1\t2\t0\t0.1\t0\t0\t0\n")) == ErrorKind::MalformedSection);
  CHECK(kind_of(small_case_text(kBus1 + kBus2, "\t1\t2\t0\tabc\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n")) ==
        ErrorKind::BadNumeric);
  CHECK(kind_of(small_case_text("\t1\t1\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n" + kBus2, kLine12)) ==
        ErrorKind::NoSlackBus);
  CHECK(kind_of(small_case_text(kBus1 + "\t2\t3\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n", kLine12)) ==
        ErrorKind::MultipleSlackBuses);
  CHECK(kind_of(small_case_text(kBus1 + kBus2, kLine12 + "\t1\t7\t0\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n")) ==
        ErrorKind::DanglingBranch);
  CHECK(kind_of(small_case_text(kBus1 + kBus2, kLine12 + "\t2\t2\t0\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n")) ==
        ErrorKind::SelfLoop);
  CHECK(kind_of(small_case_text(kBus1 + kBus2 + "\t3\t1\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n", kLine12)) ==
        ErrorKind::IslandedBus);
  CHECK(kind_of(small_case_text(kBus1 + "\t2\t4\t0\t0\t0\t0\t1\t1\t0\t100\t1\t1.1\t0.9;\n", kLine12)) ==
        ErrorKind::IslandedBus);
}

TEST_CASE("unknown case names are configuration errors") {
  try {
    load_case("ieee15");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  CHECK(bundled_case_text("case14") == bundled_case_text("ieee14"));
  CHECK(bundled_case_text("nope").empty());
}

TEST_CASE("negative reactances are recorded") {
  for (const auto& name : bundled_case_names()) {
    const GridCase g = load_case(name);
    for (std::size_t k : g.negative_reactance_branches) CHECK(g.branches[k].series_x < 0.0);
  }
}

TEST_CASE("json dump names every bus") {
  const GridCase g = load_case("ieee9");
  const std::string j = to_json(g);
  CHECK(j.find("\"base_mva\"") != std::string::npos);
  CHECK(j.find("\"buses\"") != std::string::npos);
  CHECK(to_json(g) == j);
}
