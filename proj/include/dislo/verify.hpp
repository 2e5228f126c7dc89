#pragma once

#include <json.hpp>

#include "dislo/evolve.hpp"

namespace dislo {

struct VerifyOptions {
    int stability_samples = -1;  // -1: use the scenario value
    double tol = 1e-8;
};

// Replays every invariant suite on a run; report["pass"] is the verdict.
// The sampled stability test is reported but advisory.
nlohmann::json verify_run(const RunResult& r, const VerifyOptions& opts);

}  // namespace dislo
