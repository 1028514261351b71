#include <cmath>
#include <string>

#include "skyherd/errors.hpp"
#include "skyherd/grid_world.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

void EpisodeConfig::validate() const {
  if (width < 1 || height < 1) {
    throw ConfigError("grid must be at least 1x1, got " + std::to_string(width) + "x" +
                      std::to_string(height));
  }
  if (num_targets < 0) throw ConfigError("num_targets must be non-negative");
  if (num_targets > cells() - 1) {
    throw ConfigError("num_targets " + std::to_string(num_targets) + " exceeds the " +
                      std::to_string(cells() - 1) + " free cells");
  }
  if (sense_half_width < 0) throw ConfigError("sense_half_width must be non-negative");
  if (!(reset_fraction > 0.0 && reset_fraction <= 1.0)) {
    throw ConfigError("reset_fraction must lie in (0, 1]");
  }
  if (!in_bounds(start)) throw ConfigError("start position outside the grid");
  if (motion.kind == MotionKind::random_walk && !(motion.p_move >= 0.0 && motion.p_move <= 1.0)) {
    throw ConfigError("p_move must lie in [0, 1]");
  }
}

EpisodeConfig apply_overrides(EpisodeConfig cfg, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "width") {
      cfg.width = static_cast<int>(parse_integer(value, key));
    } else if (key == "height") {
      cfg.height = static_cast<int>(parse_integer(value, key));
    } else if (key == "num_targets") {
      cfg.num_targets = static_cast<int>(parse_integer(value, key));
    } else if (key == "sense_half_width") {
      cfg.sense_half_width = static_cast<int>(parse_integer(value, key));
    } else if (key == "reset_fraction") {
      cfg.reset_fraction = parse_double(value, key);
    } else if (key == "motion") {
      if (value == "static") {
        cfg.motion.kind = MotionKind::fixed;
      } else if (value == "random_walk") {
        cfg.motion.kind = MotionKind::random_walk;
      } else {
        throw ConfigError("motion must be 'static' or 'random_walk', got '" + value + "'");
      }
    } else if (key == "p_move") {
      cfg.motion.p_move = parse_double(value, key);
    } else if (key == "start_row") {
      cfg.start.row = static_cast<int>(parse_integer(value, key));
    } else if (key == "start_col") {
      cfg.start.col = static_cast<int>(parse_integer(value, key));
    } else if (key == "seed") {
      cfg.seed = parse_unsigned(value, key);
    } else {
      throw ConfigError("unknown episode config key '" + key + "'");
    }
  }
  return cfg;
}

EpisodeConfig read_episode_config(std::istream& in, EpisodeConfig base) {
  auto cfg = apply_overrides(std::move(base), parse_key_values(in));
  cfg.validate();
  return cfg;
}

std::map<std::string, std::string> describe(const EpisodeConfig& cfg) {
  return {
      {"width", std::to_string(cfg.width)},
      {"height", std::to_string(cfg.height)},
      {"num_targets", std::to_string(cfg.num_targets)},
      {"sense_half_width", std::to_string(cfg.sense_half_width)},
      {"reset_fraction", format_real(cfg.reset_fraction)},
      {"motion", cfg.motion.kind == MotionKind::fixed ? "static" : "random_walk"},
      {"p_move", format_real(cfg.motion.p_move)},
      {"start_row", std::to_string(cfg.start.row)},
      {"start_col", std::to_string(cfg.start.col)},
      {"seed", std::to_string(cfg.seed)},
  };
}

}  // namespace skyherd
