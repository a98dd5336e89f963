#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

#include "uescore/scoring.hpp"

namespace uescore::oracles {

/// Directional meaning-equivalence judgment. Clustering queries both
/// directions, so symmetric implementations are simply queried twice.
using EquivalenceFn =
    std::function<bool(std::string_view premise, std::string_view hypothesis)>;

/// Whitespace-trim + collapse + ASCII lowercase, then exact comparison.
EquivalenceFn make_exact_match_oracle();

/// Equivalent when rouge_l_f(a, b) >= threshold (symmetric by construction).
EquivalenceFn make_rouge_threshold_oracle(double threshold);

/// Rouge-L F similarity oracle, the default for SentSAR / consistency baselines.
scoring::SimilarityFn make_rouge_similarity();

/// Client for an external entailment service: POST {"premise", "hypothesis"}
/// to base_url + "/entail", expects {"entails": bool}. Transport or protocol
/// failures raise OracleError.
EquivalenceFn make_http_entailment_oracle(std::string base_url,
                                          std::chrono::milliseconds timeout);

/// Mutex-serializing adapters for oracles that are not safe to call
/// concurrently.
EquivalenceFn make_serialized(EquivalenceFn oracle);
scoring::SimilarityFn make_serialized(scoring::SimilarityFn oracle);

}  // namespace uescore::oracles
