#include <set>
#include <sstream>

#include <doctest.h>

#include "skyherd/errors.hpp"
#include "skyherd/grid_world.hpp"
#include "skyherd/random.hpp"

using namespace skyherd;

namespace {

EpisodeState bare_state(int width, int height, GridPos agent, std::vector<GridPos> targets) {
  EpisodeState s;
  s.config.width = width;
  s.config.height = height;
  s.config.num_targets = static_cast<int>(targets.size());
  s.agent = agent;
  for (auto p : targets) s.targets.push_back({p, false, false});
  return s;
}

// Walks a random legal trajectory, checking invariants after every step.
void random_walk_invariants(const EpisodeConfig& cfg, int steps, std::uint64_t walk_seed) {
  Rng rng = make_rng(walk_seed, 1);
  EpisodeState state = register_sightings(spawn_episode(cfg));
  MemoryMap memory = MemoryMap::initial(cfg);
  memory = update_memory(std::move(memory), state, sense(state));
  std::set<GridPos> since_reset{state.agent};
  int last_recovered = 0;

  for (int i = 0; i < steps; ++i) {
    const auto legal = legal_actions(state).to_vector();
    REQUIRE_FALSE(legal.empty());
    state = apply_action(std::move(state), legal[uniform_below(rng, legal.size())]);
    REQUIRE(cfg.in_bounds(state.agent));
    CHECK(state.recovered_count >= last_recovered);
    CHECK(state.recovered_count <= cfg.num_targets);
    last_recovered = state.recovered_count;

    int recovered = 0;
    for (const auto& t : state.targets) {
      if (t.recovered) {
        ++recovered;
        CHECK(t.seen);
      }
    }
    CHECK(recovered == state.recovered_count);

    const SensoryMap sensed = sense(state);
    const int h = cfg.sense_half_width;
    for (int r = 0; r < sensed.side(); ++r) {
      for (int c = 0; c < sensed.side(); ++c) {
        const GridPos world{state.agent.row + r - h, state.agent.col + c - h};
        bool occupied = false;
        for (const auto& t : state.targets) occupied |= !t.recovered && t.pos == world;
        CHECK(sensed.at(r, c) == occupied);
      }
    }

    memory = update_memory(std::move(memory), state, sensed);
    since_reset.insert(state.agent);
    if (static_cast<double>(since_reset.size()) >= cfg.reset_fraction * cfg.cells() - 1e-9) {
      since_reset = {state.agent};
    }

    CHECK(memory.count(Plane::agent_current) == 1);
    CHECK(memory.agent() == state.agent);
    CHECK(memory.count(Plane::agent_start) == 1);
    CHECK(memory.at(Plane::agent_start, cfg.start));
    std::set<GridPos> visited;
    for (int r = 0; r < cfg.height; ++r) {
      for (int c = 0; c < cfg.width; ++c) {
        if (memory.at(Plane::visited, {r, c})) {
          visited.insert({r, c});
          CHECK(memory.at(Plane::seen, {r, c}));
        }
      }
    }
    CHECK(visited == since_reset);
  }
}

}  // namespace

TEST_CASE("spawn places distinct targets away from the start") {
  EpisodeConfig cfg;
  cfg.seed = 42;
  const auto a = spawn_episode(cfg);
  const auto b = spawn_episode(cfg);
  REQUIRE(a.targets.size() == 17);
  std::set<GridPos> cells;
  for (const auto& t : a.targets) {
    cells.insert(t.pos);
    CHECK(cfg.in_bounds(t.pos));
    CHECK(t.pos != cfg.start);
    CHECK_FALSE(t.seen);
    CHECK_FALSE(t.recovered);
  }
  CHECK(cells.size() == 17);
  CHECK(a.agent == cfg.start);
  CHECK(a.step_count == 0);
  for (std::size_t i = 0; i < a.targets.size(); ++i) CHECK(a.targets[i].pos == b.targets[i].pos);

  cfg.seed = 43;
  const auto c = spawn_episode(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.targets.size(); ++i) differs |= a.targets[i].pos != c.targets[i].pos;
  CHECK(differs);
}

TEST_CASE("the only free cell receives the target") {
  EpisodeConfig cfg;
  cfg.width = 2;
  cfg.height = 1;
  cfg.num_targets = 1;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    CHECK(spawn_episode(cfg).targets.at(0).pos == GridPos{0, 1});
  }
}

TEST_CASE("config validation") {
  EpisodeConfig cfg;
  cfg.num_targets = 400;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(spawn_episode(cfg), ConfigError);
  cfg.num_targets = 399;
  CHECK_NOTHROW(cfg.validate());

  EpisodeConfig bad;
  bad.reset_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.start = {20, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.motion = MotionModel::random_walk(1.5);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config files and overrides") {
  std::istringstream in("# search area\nwidth = 12\nheight=8\nmotion = random_walk\np_move = 0.1\nseed = 18446744073709551615\n");
  const auto cfg = read_episode_config(in);
  CHECK(cfg.width == 12);
  CHECK(cfg.height == 8);
  CHECK(cfg.motion.kind == MotionKind::random_walk);
  CHECK(cfg.motion.p_move == doctest::Approx(0.1));
  CHECK(cfg.seed == 18446744073709551615ULL);
  CHECK(apply_overrides({}, describe(cfg)).width == 12);

  std::istringstream unknown("colour = red\n");
  CHECK_THROWS_AS(read_episode_config(unknown), ConfigError);
  std::istringstream twice("width = 3\nwidth = 4\n");
  CHECK_THROWS_AS(read_episode_config(twice), ConfigError);
}

TEST_CASE("sensing window") {
  auto s = bare_state(20, 20, {10, 10}, {{9, 9}});
  const auto map = sense(s);
  CHECK(map.at(1, 1));
  CHECK(map.count() == 1);

  auto corner = bare_state(20, 20, {0, 0}, {{0, 1}, {2, 2}, {3, 3}});
  const auto edge = sense(corner);
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 2; ++k) {
      CHECK_FALSE(edge.at(k, i));
      CHECK_FALSE(edge.at(i, k));
    }
  }
  CHECK(edge.at(2, 3));
  CHECK(edge.at(4, 4));
  CHECK_FALSE(in_sensor_range(corner, {3, 3}));

  for (auto& t : corner.targets) t.recovered = true;
  corner.recovered_count = 3;
  CHECK(sense(corner).count() == 0);
}

TEST_CASE("legal actions") {
  CHECK(legal_actions({0, 0}, 20, 20) == ActionSet{Action::S, Action::E});
  CHECK(legal_actions({5, 5}, 20, 20) == ActionSet{Action::N, Action::W, Action::S, Action::E});
  CHECK(legal_actions({19, 19}, 20, 20) == ActionSet{Action::N, Action::W});
  CHECK(legal_actions({0, 0}, 1, 1).empty());
  CHECK(ActionSet{Action::E, Action::W}.first() == Action::W);
}

TEST_CASE("moving onto a target recovers it") {
  auto s = bare_state(20, 20, {5, 5}, {{5, 6}});
  s = apply_action(std::move(s), Action::E);
  CHECK(s.recovered_count == 1);
  CHECK(s.targets[0].recovered);
  CHECK(s.step_count == 1);

  auto t = bare_state(20, 20, {5, 5}, {{10, 10}});
  t = apply_action(std::move(t), Action::N);
  CHECK(t.agent == GridPos{4, 5});
  CHECK(t.recovered_count == 0);

  auto corner = bare_state(20, 20, {0, 0}, {});
  CHECK_THROWS_AS(apply_action(corner, Action::N), ContractViolation);
}

TEST_CASE("a random walk that never moves matches static targets") {
  EpisodeConfig fixed;
  fixed.seed = 9;
  EpisodeConfig still = fixed;
  still.motion = MotionModel::random_walk(0.0);
  auto a = register_sightings(spawn_episode(fixed));
  auto b = register_sightings(spawn_episode(still));
  Rng rng = make_rng(3, 3);
  for (int i = 0; i < 300; ++i) {
    const auto legal = legal_actions(a).to_vector();
    const Action act = legal[uniform_below(rng, legal.size())];
    a = apply_action(std::move(a), act);
    b = apply_action(std::move(b), act);
    REQUIRE(a.recovered_count == b.recovered_count);
    for (std::size_t k = 0; k < a.targets.size(); ++k) REQUIRE(a.targets[k].pos == b.targets[k].pos);
  }
}

TEST_CASE("moving targets stay inside and recovered ones stay put") {
  EpisodeConfig cfg;
  cfg.seed = 5;
  cfg.motion = MotionModel::random_walk(0.8);
  auto s = register_sightings(spawn_episode(cfg));
  Rng rng = make_rng(11, 0);
  std::vector<std::optional<GridPos>> frozen(s.targets.size());
  bool moved = false;
  for (int i = 0; i < 400; ++i) {
    const auto before = s.targets;
    const auto legal = legal_actions(s).to_vector();
    s = apply_action(std::move(s), legal[uniform_below(rng, legal.size())]);
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      const auto& t = s.targets[k];
      CHECK(cfg.in_bounds(t.pos));
      moved |= t.pos != before[k].pos;
      if (frozen[k]) CHECK(t.pos == *frozen[k]);
      if (t.recovered && !frozen[k]) frozen[k] = t.pos;
    }
  }
  CHECK(moved);
}

TEST_CASE("memory update marks the agent and the window") {
  EpisodeConfig cfg;
  auto s = register_sightings(spawn_episode(cfg));
  auto m = update_memory(MemoryMap::initial(cfg), s, sense(s));
  CHECK(m.count(Plane::visited) == 1);
  CHECK(m.at(Plane::visited, cfg.start));
  CHECK(m.agent() == cfg.start);
  CHECK(m.count(Plane::seen) == 9);  // 3x3 in-bounds part of the corner window

  CHECK_THROWS_AS(update_memory(MemoryMap(10, 10), s, sense(s)), ContractViolation);
  CHECK_THROWS_AS(update_memory(m, s, SensoryMap(3)), ContractViolation);
}

TEST_CASE("memory reset threshold") {
  EpisodeConfig cfg;
  cfg.num_targets = 0;
  cfg.reset_fraction = 0.05;
  auto s = spawn_episode(cfg);
  auto m = update_memory(MemoryMap::initial(cfg), s, sense(s));
  // Sweep the first row: the 20th distinct visited cell triggers the reset.
  for (int c = 1; c < 20; ++c) {
    s = apply_action(std::move(s), Action::E);
    m = update_memory(std::move(m), s, sense(s));
    if (c < 19) CHECK(m.count(Plane::visited) == c + 1);
  }
  CHECK(m.count(Plane::visited) == 1);
  CHECK(m.at(Plane::visited, {0, 19}));
  CHECK(m.at(Plane::agent_start, {0, 0}));

  EpisodeConfig full = cfg;
  full.reset_fraction = 1.0;
  full.width = 4;
  full.height = 1;
  auto t = spawn_episode(full);
  auto mm = update_memory(MemoryMap::initial(full), t, sense(t));
  for (int c = 1; c < 3; ++c) {
    t = apply_action(std::move(t), Action::E);
    mm = update_memory(std::move(mm), t, sense(t));
  }
  CHECK(mm.count(Plane::visited) == 3);
}

TEST_CASE("property: random trajectories keep every state invariant") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EpisodeConfig cfg;
    Rng rng = make_rng(seed, 77);
    cfg.width = 3 + static_cast<int>(uniform_below(rng, 18));
    cfg.height = 3 + static_cast<int>(uniform_below(rng, 18));
    cfg.num_targets = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(std::min(17, cfg.cells() - 1)) + 1));
    cfg.sense_half_width = static_cast<int>(uniform_below(rng, 3));
    cfg.reset_fraction = 0.1 + 0.9 * uniform01(rng);
    cfg.start = {static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.height))),
                 static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.width)))};
    if (seed % 2 == 1) cfg.motion = MotionModel::random_walk(0.3);
    cfg.seed = seed;
    CAPTURE(seed);
    random_walk_invariants(cfg, 250, seed);
  }
}
