#pragma once

#include <string>

#include <json.hpp>

#include "dislo/evolve.hpp"

namespace dislo {

inline constexpr const char* kLedgerSchema = "dislo-ledger/1";

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json ledger_json(const RunResult& r);
// dir/ledger.json, dir/scenario.json and dir/snapshots/*.csv
void write_run(const std::string& dir, const RunResult& r, const Context& ctx);
// inverse of write_run: scenario, ledger columns and snapshots
RunResult read_run(const std::string& dir);

std::string format_number(double v);

}  // namespace dislo
