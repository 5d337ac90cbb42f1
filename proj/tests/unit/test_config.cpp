#include <doctest.h>

#include "obbq/config.hpp"
#include "obbq/errors.hpp"

using namespace obbq;
using nlohmann::json;

namespace {

ErrorCode parse_code(const json& j) {
    try {
        parse_config(j);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("empty document gives the defaults") {
    const RunConfig c = parse_config(json::object());
    CHECK(c.data.family == "zero");
    CHECK(c.cells == 32);
    CHECK(c.solver.relaxation == 0.7);
    CHECK(c.sweep.radii == std::vector<double>{4.0, 8.0, 16.0});
    CHECK(c.sweep.policy == CellPolicy::FixedSpacing);
}

TEST_CASE("round trip through JSON") {
    RunConfig c;
    c.data.family = "swirl";
    c.data.amplitude = 2.5;
    c.cells = 16;
    c.solver.upwind = true;
    c.sweep.policy = CellPolicy::FixedCells;
    const RunConfig d = parse_config(to_json(c));
    CHECK(d.data.family == "swirl");
    CHECK(d.data.amplitude == 2.5);
    CHECK(d.cells == 16);
    CHECK(d.solver.upwind);
    CHECK(d.sweep.policy == CellPolicy::FixedCells);
    CHECK(to_json(d) == to_json(c));
}

TEST_CASE("unknown keys, wrong types and bad values are rejected") {
    CHECK(parse_code({{"bogus", 1}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"solver", {{"relax", 0.5}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"grid", {{"cells", "many"}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"grid", 3}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"grid", {{"cells", 7}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"data", {{"family", "vortex"}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"data", {{"family", "tabulated"}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"solver", {{"relaxation", 0.0}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"sweep", {{"policy", "adaptive"}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"sweep", {{"radii", {4.0}}}}}) == ErrorCode::ConfigError);
    CHECK(parse_code({{"quadrature", {{"radial_nodes", 8}}}}) == ErrorCode::ConfigError);
}

TEST_CASE("dotted overrides") {
    json doc = {{"solver", {{"tolerance", 1e-6}}}};
    apply_override(doc, "solver.relaxation=0.5");
    apply_override(doc, "data.family=swirl");
    apply_override(doc, "sweep.radii=[4, 6]");
    apply_override(doc, "solver.upwind=true");
    const RunConfig c = parse_config(doc);
    CHECK(c.solver.relaxation == 0.5);
    CHECK(c.solver.tolerance == 1e-6);
    CHECK(c.data.family == "swirl");
    CHECK(c.sweep.radii == std::vector<double>{4.0, 6.0});
    CHECK(c.solver.upwind);

    json bad;
    CHECK_THROWS_AS(apply_override(bad, "novalue"), Error);
    CHECK_THROWS_AS(apply_override(bad, "a..b=1"), Error);
    json scalar = {{"a", 1}};
    CHECK_THROWS_AS(apply_override(scalar, "a.b=1"), Error);
    json unknown = json::object();
    apply_override(unknown, "solver.nonsense=1");
    CHECK(parse_code(unknown) == ErrorCode::ConfigError);
}

TEST_CASE("schema lists every leaf with its default") {
    const json s = config_schema();
    CHECK(s.contains("solver.relaxation"));
    CHECK(s["solver.relaxation"]["default"] == 0.7);
    CHECK(s["grid.cells"]["type"] == "integer");
    for (const auto& [key, entry] : s.items()) CHECK_MESSAGE(!entry["description"].get<std::string>().empty(), key);
}

TEST_CASE("data families") {
    DataConfig d;
    d.family = "swirl";
    d.amplitude = 2.0;
    CHECK(make_data(d).family() == "swirl");
    d.family = "zero";
    CHECK(make_data(d).family() == "zero");
    d.family = "harmonic";
    d.degree = 1;
    CHECK_NOTHROW(make_data(d));
}
