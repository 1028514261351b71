#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <doctest.h>

#include "skyherd/errors.hpp"
#include "skyherd/harness.hpp"
#include "skyherd/oracle.hpp"

using namespace skyherd;

namespace {

EpisodeConfig grid(int w, int h, int targets, std::uint64_t seed) {
  EpisodeConfig c;
  c.width = w;
  c.height = h;
  c.num_targets = targets;
  c.seed = seed;
  return c;
}

StopRule iterations(int n) {
  StopRule s;
  s.max_iterations = n;
  return s;
}

// Hand-built record whose path is the given list of positions.
MissionRecord record_along(const EpisodeConfig& cfg, const std::vector<GridPos>& path, int recovered) {
  MissionRecord r;
  r.config = cfg;
  r.config.start = path.front();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    MissionStep s;
    s.step = static_cast<int>(i);
    s.agent = path[i];
    for (Action a : kActions) {
      if (displaced(path[i], a) == path[i + 1]) s.action = a;
    }
    s.clock = static_cast<double>(i + 1) * r.iteration_seconds;
    r.steps.push_back(s);
  }
  r.final_agent = path.back();
  r.recovered = recovered;
  return r;
}

void check_record_invariants(const MissionRecord& r) {
  GridPos at = r.config.start;
  double clock = 0.0;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    CHECK(s.step == static_cast<int>(i));
    CHECK(s.agent == at);
    CHECK(legal_actions(at, r.config.width, r.config.height).contains(s.action));
    CHECK(s.clock == doctest::Approx(clock + r.iteration_seconds));
    clock = s.clock;
    at = displaced(at, s.action);
  }
  CHECK(at == r.final_agent);
}

}  // namespace

TEST_CASE("stop rule") {
  StopRule battery;
  battery.battery_seconds = 489;
  CHECK(battery.iteration_limit() == 77);

  battery.battery_seconds = 6.35 * 77;  // exactly 77 iterations of battery
  CHECK(battery.iteration_limit() == 77);
  battery.battery_seconds = 6.34;
  CHECK(battery.iteration_limit() == 0);

  StopRule both;
  both.battery_seconds = 489;
  both.max_iterations = 10;
  CHECK(both.iteration_limit() == 10);
  CHECK_FALSE(StopRule{}.iteration_limit().has_value());

  StopRule bad;
  bad.max_iterations = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.iteration_seconds = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("budget accounting never exceeds the battery") {
  for (int i = 0; i < 2000; ++i) {
    StopRule s;
    s.battery_seconds = i * 0.37;
    s.iteration_seconds = 0.5 + (i % 17) * 0.61;
    const int n = *s.iteration_limit();
    CHECK(n * s.iteration_seconds <= *s.battery_seconds + 1e-9);
    CHECK((n + 1) * s.iteration_seconds > *s.battery_seconds - 1e-9);
  }
}

TEST_CASE("battery mission runs 77 iterations") {
  StopRule stop;
  stop.battery_seconds = 489;
  for (PolicyKind p : {PolicyKind::random, PolicyKind::lawnmower}) {
    const auto r = run_mission(p, grid(20, 20, 17, 3), stop);
    CHECK(r.steps.size() == 77);
    CHECK(r.steps.back().clock <= 489.0);
    CHECK(compute_metrics(r).wall_budget_s == doctest::Approx(77 * 6.35));
    check_record_invariants(r);
  }
}

TEST_CASE("zero iterations leaves only the start cell") {
  const auto r = run_mission(PolicyKind::random, grid(20, 20, 17, 4), iterations(0));
  CHECK(r.steps.empty());
  const auto m = compute_metrics(r);
  CHECK(m.coverage_fraction == doctest::Approx(1.0 / 400));
  CHECK(m.iterations == 0);
  CHECK(m.targets_per_move == 0.0);
}

TEST_CASE("lawnmower sweep") {
  SUBCASE("20x20 unlimited") {
    const auto r = run_lawnmower(grid(20, 20, 17, 7));
    CHECK(r.steps.size() == 399);
    CHECK(compute_metrics(r).coverage_fraction == 1.0);
    CHECK(r.recovered == 17);
    check_record_invariants(r);
  }
  SUBCASE("2x2 path") {
    const auto r = run_lawnmower(grid(2, 2, 0, 1));
    CHECK(r.path() == std::vector<GridPos>{{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  }
  SUBCASE("static targets are all recovered on random layouts") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto cfg = grid(7 + static_cast<int>(seed % 9), 5 + static_cast<int>(seed % 6), 6, seed);
      const auto r = run_lawnmower(cfg);
      CHECK(r.steps.size() == static_cast<std::size_t>(cfg.cells() - 1));
      CHECK(r.recovered == 6);
    }
  }
  SUBCASE("iteration cap") {
    const auto r = run_lawnmower(grid(20, 20, 17, 7), iterations(279));
    CHECK(compute_metrics(r).coverage_fraction == doctest::Approx(0.70));
  }
}

TEST_CASE("unbounded network and random missions are rejected") {
  CHECK_THROWS_AS(run_mission(PolicyKind::random, grid(20, 20, 17, 1), StopRule{}), ConfigError);
  CHECK_THROWS_AS(run_mission(PolicyKind::network, grid(20, 20, 17, 1), iterations(3)), ContractViolation);
  const auto params = NetworkParams::initialize(NetworkShape::for_episode(grid(10, 10, 3, 0)), 1);
  CHECK_THROWS_AS(run_mission(PolicyKind::network, grid(20, 20, 17, 1), iterations(3), &params),
                  ContractViolation);
}

TEST_CASE("network missions are deterministic") {
  const auto cfg = grid(20, 20, 0, 11);
  const auto params = NetworkParams::initialize(NetworkShape::for_episode(cfg), 42);
  const auto a = run_mission(PolicyKind::network, cfg, iterations(77), &params);
  const auto b = run_mission(PolicyKind::network, cfg, iterations(77), &params);
  REQUIRE(a.steps.size() == 77);
  CHECK(a.path() == b.path());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    REQUIRE(a.steps[i].scores.has_value());
    CHECK(a.steps[i].scores->values == b.steps[i].scores->values);
  }
  check_record_invariants(a);

  // Another seed only changes target placement, which is empty here.
  auto other = cfg;
  other.seed = 12;
  CHECK(run_mission(PolicyKind::network, other, iterations(77), &params).path() == a.path());
}

TEST_CASE("metrics examples") {
  const auto cfg = grid(20, 20, 17, 0);
  std::vector<GridPos> path;
  for (int r = 0; r < 20 && path.size() < 280; ++r) {
    for (int c = 0; c < 20 && path.size() < 280; ++c) path.push_back({r, r % 2 == 0 ? c : 19 - c});
  }
  CHECK(compute_metrics(record_along(cfg, path, 0)).coverage_fraction == doctest::Approx(0.70));

  std::vector<GridPos> shuttle;
  for (int i = 0; i < 78; ++i) shuttle.push_back({0, i % 2});
  const auto m = compute_metrics(record_along(cfg, shuttle, 20));
  CHECK(m.iterations == 77);
  CHECK(m.targets_per_move == doctest::Approx(0.2597).epsilon(1e-3));
  CHECK(m.coverage_fraction == doctest::Approx(2.0 / 400));
}

TEST_CASE("aggregation") {
  Metrics one{0.7, 77, 20, 20.0 / 77, 489};
  const auto single = aggregate({one});
  CHECK(single.count == 1);
  CHECK(single.coverage_fraction.median == 0.7);
  CHECK(single.iterations.median == 77);
  CHECK(single.targets_per_move.median == doctest::Approx(20.0 / 77));
  CHECK(single.recovered.sd == 0.0);

  const auto even = summarize({4, 1, 3, 2});
  CHECK(even.median == 2.0);
  CHECK(even.mean == 2.5);
  CHECK(even.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(summarize({5, 1, 3}).median == 3.0);

  CHECK_THROWS_AS(aggregate({}), DomainError);
  CHECK_THROWS_AS(summarize({}), DomainError);

  std::ostringstream csv;
  write_aggregate_csv(csv, "lawnmower", single);
  CHECK(csv.str().rfind("label,metric,count,median,mean,sd\n", 0) == 0);
  CHECK(csv.str().find("lawnmower,iterations,1,77.0,77.0,0.0\n") != std::string::npos);

  std::ostringstream per;
  write_metrics_csv(per, {one});
  CHECK(per.str().rfind("episode,coverage,iterations,recovered,targets_per_move,wall_budget_s\n0,0.7,77,20,", 0) == 0);
}

TEST_CASE("coverage matches the memory visited plane when no reset fires") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto cfg = grid(20, 20, 17, seed);
    const auto r = run_mission(PolicyKind::random, cfg, iterations(77));
    EpisodeState state = register_sightings(spawn_episode(cfg));
    MemoryMap memory = update_memory(MemoryMap::initial(cfg), state, sense(state));
    for (const auto& s : r.steps) {
      state = apply_action(std::move(state), s.action);
      memory = update_memory(std::move(memory), state, sense(state));
    }
    CHECK(state.recovered_count == r.recovered);
    const double visited = memory.count(Plane::visited);
    REQUIRE(visited < cfg.reset_fraction * cfg.cells());
    CHECK(compute_metrics(r).coverage_fraction == doctest::Approx(visited / cfg.cells()));
  }
}

TEST_CASE("run_missions is independent of worker count") {
  const auto master = grid(20, 20, 17, 99);
  const auto params = NetworkParams::initialize(NetworkShape::for_episode(master), 3);
  StopRule stop;
  stop.battery_seconds = 489;
  for (PolicyKind p : {PolicyKind::random, PolicyKind::network}) {
    const auto one = run_missions(p, master, 9, stop, &params, 1);
    const auto four = run_missions(p, master, 9, stop, &params, 4);
    REQUIRE(one.size() == 9);
    std::ostringstream a;
    std::ostringstream b;
    for (const auto& r : one) write_mission_record(a, r);
    for (const auto& r : four) write_mission_record(b, r);
    CHECK(a.str() == b.str());
    CHECK(one[3].config.seed == episode_config(master, 3).seed);
  }
  CHECK(run_missions(PolicyKind::random, master, 0, stop).empty());
}

TEST_CASE("rendering") {
  RenderSpec spec;
  SUBCASE("empty mission") {
    const auto r = run_mission(PolicyKind::random, grid(6, 5, 3, 2), iterations(0));
    const auto cells = classify_cells(r);
    // The start cell outranks everything; unseen cells stay black in the image.
    CHECK(cells[0] == CellState::start);
    spec.cell_pixels = 1;
    const auto ppm = render(r, spec, RenderFormat::ppm);
    const std::string header = "P6\n6 5\n255\n";
    REQUIRE(ppm.rfind(header, 0) == 0);
    REQUIRE(ppm.size() == header.size() + 6 * 5 * 3);
    auto pixel = [&](int row, int col) {
      const auto at = header.size() + static_cast<std::size_t>((row * 6 + col) * 3);
      return Rgb{static_cast<std::uint8_t>(ppm[at]), static_cast<std::uint8_t>(ppm[at + 1]),
                 static_cast<std::uint8_t>(ppm[at + 2])};
    };
    CHECK(pixel(0, 0) == Rgb{255, 140, 0});
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 6; ++col) {
        const auto state = cells[static_cast<std::size_t>(row * 6 + col)];
        CHECK(pixel(row, col) == spec.colours[static_cast<std::size_t>(state)]);
        if (row > 0 || col > 0) CHECK(state != CellState::visited);
      }
    }
  }
  SUBCASE("empty mission without sensing history") {
    auto r = run_mission(PolicyKind::random, grid(6, 5, 0, 2), iterations(0));
    const auto cells = classify_cells(r);
    CHECK(cells[0] == CellState::start);
    for (std::size_t i = 1; i < cells.size(); ++i) CHECK(cells[i] != CellState::visited);
  }
  SUBCASE("full lawnmower has no black cells") {
    const auto r = run_lawnmower(grid(20, 20, 17, 7));
    const auto cells = classify_cells(r);
    CHECK(std::count(cells.begin(), cells.end(), CellState::unvisited) == 0);
    CHECK(cells[0] == CellState::start);
    CHECK(cells[static_cast<std::size_t>(19 * 20)] == CellState::finish);
    CHECK(std::count(cells.begin(), cells.end(), CellState::target) == 17);
    const auto ascii = render(r, spec, RenderFormat::ascii);
    CHECK(ascii.find('.') == std::string::npos);
    CHECK(std::count(ascii.begin(), ascii.end(), '\n') == 20);
  }
  SUBCASE("renders are byte deterministic") {
    const auto r = run_mission(PolicyKind::random, grid(20, 20, 17, 5), iterations(77));
    for (auto f : {RenderFormat::ascii, RenderFormat::svg, RenderFormat::ppm}) {
      CHECK(render(r, spec, f) == render(r, spec, f));
    }
    const auto svg = render(r, spec, RenderFormat::svg);
    CHECK(svg.rfind("<svg", 0) == 0);
    spec.arrow_interval = 0;
    CHECK(render(r, spec, RenderFormat::svg) != svg);
  }
  SUBCASE("formats and spec validation") {
    CHECK(parse_render_format("svg") == RenderFormat::svg);
    CHECK(parse_render_format("ppm") == RenderFormat::ppm);
    CHECK_THROWS_AS(parse_render_format("png"), UsageError);
    spec.cell_pixels = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}

TEST_CASE("mission records round trip") {
  const auto cfg = grid(12, 9, 5, 0xfedcba9876543210ULL);
  const auto params = NetworkParams::initialize(NetworkShape::for_episode(cfg), 8);
  std::stringstream buffer;
  const auto a = run_mission(PolicyKind::network, cfg, iterations(30), &params);
  const auto b = run_lawnmower(cfg);
  write_mission_record(buffer, a);
  write_mission_record(buffer, b);
  const std::string text = buffer.str();
  const auto back = read_mission_records(buffer);
  REQUIRE(back.size() == 2);
  CHECK(back[0].policy == PolicyKind::network);
  CHECK(back[0].config.seed == cfg.seed);
  CHECK(back[0].path() == a.path());
  CHECK(back[0].steps[4].scores->values == a.steps[4].scores->values);
  CHECK(back[1].path() == b.path());
  CHECK(back[1].recovered == b.recovered);
  CHECK_FALSE(back[1].steps[0].scores.has_value());

  std::ostringstream again;
  for (const auto& r : back) write_mission_record(again, r);
  CHECK(again.str() == text);

  std::istringstream junk("{\"type\":\"step\"}\n");
  CHECK_THROWS_AS(read_mission_records(junk), DatasetError);
  std::istringstream truncated(text.substr(0, text.find("summary")));
  CHECK_THROWS_AS(read_mission_records(truncated), DatasetError);
}
