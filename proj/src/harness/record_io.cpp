#include <string>

#include <json.hpp>

#include "skyherd/errors.hpp"
#include "skyherd/harness.hpp"

namespace skyherd {

namespace {

using nlohmann::json;

std::string bits(const SensoryMap& s) {
  std::string out;
  for (auto v : s.cells()) out += v ? '1' : '0';
  return out;
}

SensoryMap parse_bits(const std::string& text, int side) {
  if (text.size() != static_cast<std::size_t>(side * side)) {
    throw DatasetError("sensed map has " + std::to_string(text.size()) + " cells, expected " +
                       std::to_string(side * side));
  }
  SensoryMap s(side);
  for (int i = 0; i < side * side; ++i) {
    const char ch = text[static_cast<std::size_t>(i)];
    if (ch != '0' && ch != '1') throw DatasetError("sensed map must be a 0/1 string");
    s.set(i / side, i % side, ch == '1');
  }
  return s;
}

GridPos parse_pos(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

}  // namespace

void write_mission_record(std::ostream& out, const MissionRecord& record) {
  json header;
  header["type"] = "mission";
  header["policy"] = policy_name(record.policy);
  header["config"] = describe(record.config);
  header["iteration_seconds"] = record.iteration_seconds;
  out << header.dump() << '\n';
  for (const auto& s : record.steps) {
    json j;
    j["type"] = "step";
    j["step"] = s.step;
    j["agent"] = {s.agent.row, s.agent.col};
    j["sensed"] = bits(s.sensed);
    j["scores"] = s.scores ? json(s.scores->values) : json(nullptr);
    j["action"] = std::string(1, action_symbol(s.action));
    j["recoveries"] = s.recoveries;
    j["clock"] = s.clock;
    out << j.dump() << '\n';
  }
  json summary;
  summary["type"] = "summary";
  summary["iterations"] = record.steps.size();
  summary["recovered"] = record.recovered;
  summary["final_agent"] = {record.final_agent.row, record.final_agent.col};
  out << summary.dump() << '\n';
}

std::vector<MissionRecord> read_mission_records(std::istream& in) {
  std::vector<MissionRecord> records;
  bool open = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "mission") {
        if (open) throw DatasetError("mission without summary");
        MissionRecord r;
        r.policy = parse_policy(j.at("policy").get<std::string>());
        r.config = apply_overrides(EpisodeConfig{}, j.at("config").get<std::map<std::string, std::string>>());
        r.iteration_seconds = j.at("iteration_seconds").get<double>();
        records.push_back(std::move(r));
        open = true;
      } else if (type == "step") {
        if (!open) throw DatasetError("step outside a mission");
        auto& r = records.back();
        MissionStep s;
        s.step = j.at("step").get<int>();
        if (s.step != static_cast<int>(r.steps.size())) throw DatasetError("step indices must be contiguous");
        s.agent = parse_pos(j.at("agent"));
        if (!r.config.in_bounds(s.agent)) throw DatasetError("agent outside the grid");
        s.sensed = parse_bits(j.at("sensed").get<std::string>(), r.config.sense_side());
        if (!j.at("scores").is_null()) {
          ActionScores scores;
          scores.values = j.at("scores").get<std::array<double, 4>>();
          s.scores = scores;
        }
        const auto symbol = j.at("action").get<std::string>();
        const auto action = symbol.size() == 1 ? parse_action(symbol[0]) : std::nullopt;
        if (!action) throw DatasetError("unknown action '" + symbol + "'");
        s.action = *action;
        s.recoveries = j.at("recoveries").get<int>();
        s.clock = j.at("clock").get<double>();
        r.steps.push_back(std::move(s));
      } else if (type == "summary") {
        if (!open) throw DatasetError("summary outside a mission");
        auto& r = records.back();
        if (j.at("iterations").get<std::size_t>() != r.steps.size()) {
          throw DatasetError("summary iteration count disagrees with the steps");
        }
        r.recovered = j.at("recovered").get<int>();
        r.final_agent = parse_pos(j.at("final_agent"));
        if (!r.config.in_bounds(r.final_agent)) throw DatasetError("final agent outside the grid");
        open = false;
      } else {
        throw DatasetError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw DatasetError("mission record line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DatasetError("mission record line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError("mission record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (open) throw DatasetError("mission record ends without a summary");
  return records;
}

}  // namespace skyherd
