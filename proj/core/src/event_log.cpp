#include "lemonshark/event_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace lemonshark {

void write_event_log(std::ostream& out, const EventLog& log) {
  nlohmann::ordered_json h;
  h["scenario"] = to_json(log.scenario);
  h["crashed"] = log.crashed;
  out << h.dump() << '\n';
  for (const auto& e : log.events) out << to_json(e).dump() << '\n';
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("event log is empty");
  try {
    const auto h = nlohmann::json::parse(line);
    log.scenario = scenario_from_json(h.at("scenario"));
    log.crashed = h.at("crashed").get<std::vector<NodeId>>();
    std::uint64_t expect = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto e = net_event_from_json(nlohmann::json::parse(line));
      if (e.seq != expect++) throw ConfigError("event log sequence gap at seq " + std::to_string(e.seq));
      log.events.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed event log: " + std::string(e.what()));
  }
  return log;
}

void save_event_log(const std::string& path, const EventLog& log) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_event_log(out, log);
}

EventLog load_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_event_log(in);
}

}  // namespace lemonshark
