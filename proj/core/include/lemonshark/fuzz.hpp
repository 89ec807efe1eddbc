#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lemonshark/metrics.hpp"

namespace lemonshark {

struct FuzzCampaign {
  std::uint64_t base_seed = 1;
  std::size_t runs = 1000;
  std::vector<std::uint32_t> fs{1, 2, 3};  // n = 3f+1
  FinalityMode mode = FinalityMode::Lemonshark;
  Round rounds = 24;
  bool adversarial_only = false;  // random and scripted delay policies only
  std::string fail_dir;           // failing scenarios are written here when set
};

struct FuzzOutcome {
  Scenario scenario;
  std::string label;
  bool error = false;
  std::string message;
  OracleReport oracle;
  PersistStats persist;
  TypeStats beta, gamma;
};

struct FuzzReport {
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::size_t errors = 0;
  std::size_t sto_checked = 0;
  std::size_t sto_mismatches = 0;
  std::size_t state_divergences = 0;
  std::size_t leader_conflicts = 0;
  std::size_t persist_rounds = 0;
  std::size_t persist_violations = 0;
  std::vector<std::string> failing;  // labels
  std::vector<std::string> saved;    // written scenario files

  nlohmann::ordered_json to_json() const;
};

std::vector<std::pair<std::string, Scenario>> fuzz_grid(const FuzzCampaign& c);
FuzzOutcome fuzz_one(const std::string& label, const Scenario& sc);
FuzzReport fuzz(const FuzzCampaign& c, const std::function<void(const FuzzOutcome&)>& progress = {});

}  // namespace lemonshark
