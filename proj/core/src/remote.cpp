#include "mstp/remote.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "mstp/log.hpp"

namespace mstp {
namespace {

// Holds one in-flight slot for the duration of a call.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

}  // namespace

CallPolicy CallPolicy::from_params(const nlohmann::json& params) {
  CallPolicy policy;
  if (!params.is_object()) return policy;
  if (params.contains("timeout_ms")) {
    const auto ms = params.at("timeout_ms").get<std::int64_t>();
    if (ms <= 0) throw Error(Errc::InvalidArgument, "timeout_ms must be positive");
    policy.timeout = std::chrono::milliseconds(ms);
  }
  if (params.contains("retries")) {
    const auto r = params.at("retries").get<std::int64_t>();
    if (r < 0) throw Error(Errc::InvalidArgument, "retries must be >= 0");
    policy.retries = static_cast<unsigned>(r);
  }
  for (const char* key : {"max_inflight", "max_in_flight"}) {
    if (!params.contains(key)) continue;
    const auto m = params.at(key).get<std::int64_t>();
    if (m < 1 || m > 1024) throw Error(Errc::InvalidArgument, "max_in_flight must be in [1, 1024]");
    policy.max_in_flight = static_cast<unsigned>(m);
  }
  return policy;
}

RemoteClient::RemoteClient(std::string endpoint, CallPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(policy), in_flight_(std::clamp<unsigned>(policy.max_in_flight, 1, 1024)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (endpoint_.rfind("http://", 0) != 0) {
    if (endpoint_.find("://") != std::string::npos) {
      throw Error(Errc::InvalidArgument, "only http:// endpoints are supported: " + endpoint_);
    }
    endpoint_ = "http://" + endpoint_;
  }
}

std::string RemoteClient::next_request_id() {
  return std::to_string(counter_.fetch_add(1, std::memory_order_relaxed) + 1);
}

nlohmann::json RemoteClient::post(const std::string& path, const nlohmann::json& body) {
  return call("POST", path, &body);
}

nlohmann::json RemoteClient::get(const std::string& path) { return call("GET", path, nullptr); }

bool RemoteClient::healthy() {
  try {
    const auto j = get(std::string(protocol::kHealthPath));
    return j.value("status", "") == "ok" && j.value("protocol_version", "") == protocol::kVersion;
  } catch (const Error&) {
    return false;
  }
}

nlohmann::json RemoteClient::call(const std::string& method, const std::string& path, const nlohmann::json* body) {
  SlotGuard slot(in_flight_);
  const std::string payload = body ? body->dump() : std::string();
  const auto timeout = policy_.timeout;
  Errc last_code = Errc::TransportError;
  std::string last_message;

  for (unsigned attempt = 0; attempt <= policy_.retries; ++attempt) {
    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_keep_alive(false);

    const auto started = std::chrono::steady_clock::now();
    auto result = method == "POST" ? client.Post(path, payload, "application/json") : client.Get(path);
    const auto elapsed = std::chrono::steady_clock::now() - started;

    if (!result) {
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= timeout * 9 / 10);
      last_code = timed_out ? Errc::Timeout : Errc::TransportError;
      last_message = method + " " + endpoint_ + path + ": " + httplib::to_string(err);
      log::debug("attempt " + std::to_string(attempt + 1) + " failed: " + last_message);
      continue;
    }

    nlohmann::json decoded;
    try {
      decoded = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::ProtocolError, method + " " + path + ": response body is not valid JSON (status " +
                                           std::to_string(result->status) + ")");
    }
    if (result->status >= 400) {
      std::string code_name = decoded.is_object() ? decoded.value("error", "") : "";
      std::string reason = decoded.is_object() ? decoded.value("reason", "") : "";
      auto code = protocol::errc_from_string(code_name).value_or(Errc::ProtocolError);
      throw Error(code, "server answered " + std::to_string(result->status) + " " + code_name + ": " + reason);
    }
    return decoded;
  }
  throw Error(last_code, last_message + " (after " + std::to_string(policy_.retries + 1) + " attempts)");
}

namespace {

// A response that names a different request belongs to someone else.
void require_echo(const nlohmann::json& response, const std::string& request_id) {
  if (!response.is_object()) return;
  auto it = response.find("request_id");
  if (it != response.end() && (!it->is_string() || it->get<std::string>() != request_id)) {
    throw Error(Errc::ProtocolError, "response echoes request id " + it->dump() + ", expected " + request_id);
  }
}

}  // namespace

RemoteDecisionBackend::RemoteDecisionBackend(std::shared_ptr<RemoteClient> client,
                                             std::shared_ptr<const LevelSchema> schema)
    : client_(std::move(client)), schema_(std::move(schema)), digest_(schema_->digest()) {}

protocol::Header RemoteDecisionBackend::header(const StepContext& ctx) {
  return {ctx.clip_id, ctx.step, digest_, client_->next_request_id()};
}

TransitionDecision RemoteDecisionBackend::decide(const StepContext& ctx, const StateVector& state,
                                                 const ImageBuffer& image) {
  protocol::StcRequest req{header(ctx), state, protocol::encode_image(image)};
  const auto response = client_->post(std::string(protocol::kStcPath), protocol::encode(req));
  require_echo(response, req.header.request_id);
  try {
    return protocol::decode_stc_response(response);
  } catch (const Error& e) {
    throw Error(Errc::InvalidAgentOutput, std::string("controller: ") + e.what());
  }
}

std::string RemoteDecisionBackend::predict(const StepContext& ctx, std::size_t level, const StateVector& assembled,
                                           std::span<const std::string> allowed, const ImageBuffer& image) {
  protocol::PredictRequest req{header(ctx), level, assembled, {allowed.begin(), allowed.end()},
                               protocol::encode_image(image)};
  const auto response =
      client_->post(std::string(protocol::kPredictPrefix) + std::to_string(level), protocol::encode(req));
  require_echo(response, req.header.request_id);
  std::string label;
  try {
    label = protocol::decode_predict_response(response);
  } catch (const Error& e) {
    throw Error(Errc::InvalidAgentOutput, std::string("level ") + std::to_string(level) + ": " + e.what());
  }
  if (std::find(allowed.begin(), allowed.end(), label) == allowed.end()) {
    // Not transient, so not retried here or by the cascade.
    throw Error(Errc::InvalidAgentOutput,
                "level " + std::to_string(level) + " answered '" + label + "' outside the allowed set");
  }
  return label;
}

RemoteGenerator::RemoteGenerator(std::shared_ptr<RemoteClient> client, std::shared_ptr<const LevelSchema> schema)
    : client_(std::move(client)), digest_(schema->digest()) {}

std::shared_ptr<const ImageBuffer> RemoteGenerator::generate(const StepContext& ctx, const StateVector& next_state,
                                                             std::shared_ptr<const ImageBuffer> image) {
  protocol::GenerateRequest req{{ctx.clip_id, ctx.step, digest_, client_->next_request_id()},
                                next_state,
                                protocol::encode_image(*image)};
  const auto response = client_->post(std::string(protocol::kGeneratePath), protocol::encode(req));
  require_echo(response, req.header.request_id);
  auto decoded = protocol::decode_image(protocol::decode_generate_response(response));
  if (!decoded.same_shape(*image)) {
    throw Error(Errc::DimensionMismatch, "generator returned an image of a different shape");
  }
  return std::make_shared<const ImageBuffer>(std::move(decoded));
}

}  // namespace mstp
