#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lemonshark/scenario.hpp"

namespace lemonshark {

// JSON-lines: a header line {"scenario":..., "crashed":[...]} followed by one NetEvent per line.
struct EventLog {
  Scenario scenario;
  std::vector<NodeId> crashed;
  std::vector<NetEvent> events;
};

void write_event_log(std::ostream& out, const EventLog& log);
EventLog read_event_log(std::istream& in);
void save_event_log(const std::string& path, const EventLog& log);
EventLog load_event_log(const std::string& path);

}  // namespace lemonshark
