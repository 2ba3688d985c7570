#pragma once

// JSON forms of result objects.

#include "imprs/adaptive.hpp"
#include "imprs/toml.hpp"

namespace imprs {

ordered_json to_json(const StrategyParams& w);
ordered_json to_json(const CostBreakdown& c);
/// Mean breakdown plus std_error and history count.
ordered_json to_json(const ExpectedCost& c);
ordered_json to_json(const SurrogatePrediction& p);
ordered_json to_json(const SamplingDistribution& d);
ordered_json to_json(const AdaptationStage& s);
ordered_json to_json(const AdaptationRecord& r);
ordered_json to_json(const EstimatorReport& r);

/// Pretty JSON text with a trailing newline.
std::string dump(const ordered_json& j);

}  // namespace imprs
