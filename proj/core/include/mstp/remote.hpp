#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "mstp/agents.hpp"
#include "mstp/generation.hpp"
#include "mstp/protocol.hpp"
#include "mstp/schema.hpp"

namespace mstp {

struct CallPolicy {
  std::chrono::milliseconds timeout{5000};
  unsigned retries = 2;
  unsigned max_in_flight = 8;

  // Reads timeout_ms, retries and max_in_flight from descriptor params.
  static CallPolicy from_params(const nlohmann::json& params);
};

/// HTTP client for the model-backend protocol. Calls from any number of
/// threads share a bound on in-flight requests. Only transport failures are
/// retried; a 4xx/5xx answer or a decodable but invalid body is final.
class RemoteClient {
 public:
  RemoteClient(std::string endpoint, CallPolicy policy = {});

  const std::string& endpoint() const noexcept { return endpoint_; }
  const CallPolicy& policy() const noexcept { return policy_; }

  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  nlohmann::json get(const std::string& path);

  // GET /v1/health; true when the server reports our protocol version.
  bool healthy();

  // Unique-per-client id for request/response matching.
  std::string next_request_id();

 private:
  nlohmann::json call(const std::string& method, const std::string& path, const nlohmann::json* body);

  std::string endpoint_;
  CallPolicy policy_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::uint64_t> counter_{0};
};

/// Controller and level agents served by one remote endpoint. Out-of-set
/// labels and malformed answers surface as InvalidAgentOutput.
class RemoteDecisionBackend : public TransitionController, public LevelAgent {
 public:
  RemoteDecisionBackend(std::shared_ptr<RemoteClient> client, std::shared_ptr<const LevelSchema> schema);

  TransitionDecision decide(const StepContext& ctx, const StateVector& state, const ImageBuffer& image) override;
  std::string predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                      std::span<const std::string> allowed, const ImageBuffer& image) override;

 private:
  protocol::Header header(const StepContext& ctx);

  std::shared_ptr<RemoteClient> client_;
  std::shared_ptr<const LevelSchema> schema_;
  std::string digest_;
};

class RemoteGenerator : public Generator {
 public:
  RemoteGenerator(std::shared_ptr<RemoteClient> client, std::shared_ptr<const LevelSchema> schema);

  std::shared_ptr<const ImageBuffer> generate(const StepContext& ctx, const StateVector& next_state,
                                              std::shared_ptr<const ImageBuffer> image) override;

 private:
  std::shared_ptr<RemoteClient> client_;
  std::string digest_;
};

}  // namespace mstp
