#include "uescore/oracles.hpp"

#include <cctype>
#include <memory>
#include <mutex>
#include <utility>

// Eigen must precede httplib: resolv.h (dragged in by httplib) defines a
// `res` macro that breaks Eigen's product kernels.
#include "uescore/errors.hpp"
#include "uescore/numerics.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace uescore::oracles {
namespace {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

EquivalenceFn make_exact_match_oracle() {
  return [](std::string_view a, std::string_view b) {
    return normalize_text(a) == normalize_text(b);
  };
}

EquivalenceFn make_rouge_threshold_oracle(double threshold) {
  return [threshold](std::string_view a, std::string_view b) {
    return numerics::rouge_l_f(a, b) >= threshold;
  };
}

scoring::SimilarityFn make_rouge_similarity() {
  return [](std::string_view a, std::string_view b) {
    return numerics::rouge_l_f(a, b);
  };
}

EquivalenceFn make_http_entailment_oracle(std::string base_url,
                                          std::chrono::milliseconds timeout) {
  auto client = std::make_shared<httplib::Client>(base_url);
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return [client, base_url = std::move(base_url)](std::string_view premise,
                                                  std::string_view hypothesis) {
    const nlohmann::json request{{"premise", std::string(premise)},
                                 {"hypothesis", std::string(hypothesis)}};
    auto res = client->Post("/entail", request.dump(), "application/json");
    if (!res) {
      throw OracleError("entailment service " + base_url + " unreachable: " +
                        httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw OracleError("entailment service " + base_url + " returned status " +
                        std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body).at("entails").get<bool>();
    } catch (const std::exception& e) {
      throw OracleError(std::string("entailment service response malformed: ") +
                        e.what());
    }
  };
}

EquivalenceFn make_serialized(EquivalenceFn oracle) {
  auto mutex = std::make_shared<std::mutex>();
  return [mutex, oracle = std::move(oracle)](std::string_view a,
                                             std::string_view b) {
    std::lock_guard<std::mutex> lock(*mutex);
    return oracle(a, b);
  };
}

scoring::SimilarityFn make_serialized(scoring::SimilarityFn oracle) {
  auto mutex = std::make_shared<std::mutex>();
  return [mutex, oracle = std::move(oracle)](std::string_view a,
                                             std::string_view b) {
    std::lock_guard<std::mutex> lock(*mutex);
    return oracle(a, b);
  };
}

}  // namespace uescore::oracles
