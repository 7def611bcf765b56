#include <catch_amalgamated.hpp>

#include <array>
#include <cstddef>
#include <vector>

#include "test_support.hpp"

using namespace topoforge;
using Catch::Approx;

namespace {

// Counts unordered pairs of grid points at Manhattan distance 1.
std::size_t enumerate_grid_edges(std::size_t rows, std::size_t cols) {
  std::size_t n = 0;
  for (std::size_t p = 0; p < rows * cols; ++p)
    for (std::size_t q = p + 1; q < rows * cols; ++q) {
      const long dr = static_cast<long>(p / cols) - static_cast<long>(q / cols);
      const long dc = static_cast<long>(p % cols) - static_cast<long>(q % cols);
      n += std::abs(dr) + std::abs(dc) == 1;
    }
  return n;
}

}  // namespace

TEST_CASE("grid sizes", "[grid]") {
  const auto g56 = generate_grid(5, 6);
  CHECK(g56.grid_points() == 30);
  CHECK(g56.node_count == 30);
  CHECK(g56.edge_count() == 49);

  const auto g12 = generate_grid(1, 2);
  CHECK(g12.grid_points() == 2);
  CHECK(g12.edge_count() == 1);
  CHECK(g12.external_ground);

  const auto g22 = generate_grid(2, 2);
  CHECK(g22.node_count == 4);
  CHECK(g22.edge_count() == 4);
}

TEST_CASE("grid rejects degenerate shapes", "[grid]") {
  CHECK_THROWS(generate_grid(1, 1));
  CHECK_THROWS(generate_grid(0, 3));
  CHECK_THROWS(generate_grid(3, 1));
  CHECK_THROWS(generate_grid(1, 3, GroundPlacement::Corner));
}

TEST_CASE("grid edge count matches enumeration", "[grid][property]") {
  for (std::size_t rows = 1; rows <= 7; ++rows)
    for (std::size_t cols = 2; cols <= 7; ++cols) {
      for (auto ground : {GroundPlacement::Auto, GroundPlacement::External}) {
        const auto t = generate_grid(rows, cols, ground);
        INFO(rows << "x" << cols);
        CHECK(t.edge_count() == enumerate_grid_edges(rows, cols));
        CHECK(t.edge_count() == rows * (cols - 1) + (rows - 1) * cols);
        for (const auto& e : t.edges) {
          CHECK(e.a != e.b);
          CHECK(e.b.index < t.node_count);
        }
        CHECK(t.boundary.source_pos.index < t.node_count);
        CHECK(t.boundary.load_pos.index < t.node_count);
        CHECK(t.boundary.source_pos != kGround);
        CHECK(t.boundary.load_pos != kGround);
      }
    }
}

TEST_CASE("grid edge order is row-major, horizontal first", "[grid]") {
  const auto t = generate_grid(2, 3);
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 1}, {1, 2}, {0, 3}, {1, 4},
                                                                  {2, 5}, {3, 4}, {4, 5}};
  REQUIRE(t.edges.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(t.edges[i].id == i);
    CHECK(t.edges[i].a.index == expected[i].first);
    CHECK(t.edges[i].b.index == expected[i].second);
  }
  CHECK(t.boundary.source_pos.index == 3);
  CHECK(t.boundary.load_pos.index == 5);
}

TEST_CASE("variable counts", "[model]") {
  const auto g56 = generate_grid(5, 6);
  CHECK(variable_count(initialize_relaxed(g56, 1)) == 343);
  CHECK(variable_count(initialize_relaxed(generate_grid(1, 2), 1)) == 7);

  auto m = make_uniform_model(generate_grid(1, 4), Mode::open());
  REQUIRE(m.edges.size() == 3);
  m.edges[0] = Mode::short_circuit();
  m.edges[2] = Mode::resistor(10.0);
  CHECK(variable_count(m) == 1);

  EdgeState partial;
  partial.active = {true, false, false, true};
  CHECK(variable_count(EdgeConfig{partial}) == 3);
}

TEST_CASE("pack and unpack round-trip", "[model][property]") {
  const auto t = generate_grid(3, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = sample_random_relaxed(t, seed);
    const auto v = pack_variables(m);
    CHECK(v.size() == variable_count(m));
    CHECK(unpack_variables(m, v) == m);

    Rng rng(seed + 100);
    std::vector<double> w(v.size());
    std::size_t k = 0;
    for (std::size_t e = 0; e < m.edges.size(); ++e)
      for (Branch b : kBranches) {
        if (carries_parameter(b)) w[k++] = log_uniform(rng, 1e-3, 1e3);
        w[k++] = uniform01(rng);
      }
    CHECK(pack_variables(unpack_variables(m, w)) == w);

    const auto d = sample_random_states(t, seed);
    CHECK(unpack_variables(d, pack_variables(d)) == d);
  }
}

TEST_CASE("pack of a parameterless model is empty", "[model]") {
  const auto m = make_uniform_model(generate_grid(2, 2), Mode::open());
  CHECK(pack_variables(m).empty());
  CHECK(unpack_variables(m, std::vector<double>{}) == m);
}

TEST_CASE("unpack rejects a length mismatch", "[model]") {
  const auto m = initialize_relaxed(generate_grid(1, 2), 3);
  CHECK_THROWS_AS(unpack_variables(m, std::vector<double>(6, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(unpack_variables(m, std::vector<double>(8, 0.5)), std::invalid_argument);
}

TEST_CASE("random states are reproducible", "[model]") {
  const auto t = generate_grid(5, 6);
  CHECK(sample_random_states(t, 42) == sample_random_states(t, 42));
  CHECK(initialize_relaxed(t, 42) == initialize_relaxed(t, 42));
  CHECK_FALSE(sample_random_states(t, 42) == sample_random_states(t, 43));
}

TEST_CASE("random modes are uniform over the five tags", "[model][statistics]") {
  const auto t = generate_grid(1, 2);
  constexpr std::size_t kDraws = 10000;
  std::array<std::size_t, 5> counts{};
  for (std::uint64_t seed = 0; seed < kDraws; ++seed) {
    const auto m = sample_random_states(t, seed);
    ++counts[static_cast<std::size_t>(std::get<Mode>(m.edges[0]).tag())];
  }
  double chi2 = 0.0;
  const double expected = kDraws / 5.0;
  for (std::size_t c : counts) {
    const double freq = static_cast<double>(c) / kDraws;
    CHECK(std::abs(freq - 0.2) <= 0.015);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 99th percentile of chi-square with 4 degrees of freedom.
  CHECK(chi2 < 13.277);
}

TEST_CASE("degenerate bounds pin parameters", "[model]") {
  ParameterBounds b;
  b.resistance = {1.0, 1.0};
  const auto m = sample_random_states(generate_grid(4, 4), 7, b);
  std::size_t resistors = 0;
  for (const auto& cfg : m.edges) {
    const auto& mode = std::get<Mode>(cfg);
    if (mode.tag() != ModeTag::Resistor) continue;
    ++resistors;
    CHECK(mode.value() == 1.0);
  }
  CHECK(resistors > 0);
}

TEST_CASE("relaxed parameters stay inside their bounds", "[model][property]") {
  const ParameterBounds b;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = sample_random_relaxed(generate_grid(5, 6), seed, b);
    for (const auto& cfg : m.edges) {
      const auto& st = std::get<EdgeState>(cfg);
      CHECK(b.resistance.contains(st.r));
      CHECK(b.inductance.contains(st.l));
      CHECK(b.capacitance.contains(st.c));
      for (double s : st.s) CHECK((s >= 0.0 && s <= 1.0));
    }
  }
}

TEST_CASE("mode invariants", "[model]") {
  CHECK_THROWS(Mode::resistor(0.0));
  CHECK_THROWS(Mode::capacitor(-1.0));
  CHECK_FALSE(Mode::open().param().has_value());
  CHECK_FALSE(Mode::short_circuit().has_param());
  CHECK(Mode::inductor(2.0).value() == 2.0);
  for (ModeTag t : kAllModeTags) CHECK(mode_tag_from_string(to_string(t)) == t);
}

TEST_CASE("model validation", "[model]") {
  auto m = initialize_relaxed(generate_grid(2, 2), 1);
  CHECK_NOTHROW(validate(m));
  auto bad_eps = m;
  bad_eps.scenario.epsilon = 1.0;
  CHECK_THROWS_AS(validate(bad_eps), MalformedInput);
  auto missing = m;
  missing.edges.pop_back();
  CHECK_THROWS_AS(validate(missing), MalformedInput);
  auto bad_switch = m;
  std::get<EdgeState>(bad_switch.edges[0]).s[1] = 1.5;
  CHECK_THROWS_AS(validate(bad_switch), MalformedInput);
}
