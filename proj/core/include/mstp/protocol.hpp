#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mstp/agents.hpp"
#include "mstp/error.hpp"
#include "mstp/image.hpp"
#include "mstp/schema.hpp"

namespace mstp::protocol {

inline constexpr std::string_view kVersion = "1";

inline constexpr std::string_view kStcPath = "/v1/stc";
inline constexpr std::string_view kPredictPrefix = "/v1/predict/";  // + level
inline constexpr std::string_view kGeneratePath = "/v1/generate";
inline constexpr std::string_view kHealthPath = "/v1/health";

struct Header {
  std::string clip_id;
  std::int64_t step_k = 0;
  std::string schema_digest;
  std::string request_id;  // optional; echoed back when present
};

struct StcRequest {
  Header header;
  StateVector state;
  std::string image;  // base64 PNG
};

struct PredictRequest {
  Header header;
  std::size_t level = 0;  // carried in the path
  StateVector partial_state;
  std::vector<std::string> allowed_labels;
  std::string image;
};

struct GenerateRequest {
  Header header;
  StateVector state;
  std::string image;
};

nlohmann::json encode(const StcRequest& r);
nlohmann::json encode(const PredictRequest& r);
nlohmann::json encode(const GenerateRequest& r);

// Decoders throw ProtocolError on missing/ill-typed fields or a version
// mismatch. The predict level comes from the request path.
StcRequest decode_stc_request(const nlohmann::json& j);
PredictRequest decode_predict_request(const nlohmann::json& j, std::size_t level);
GenerateRequest decode_generate_request(const nlohmann::json& j);

nlohmann::json stc_response(const TransitionDecision& decision, const std::string& request_id);
nlohmann::json predict_response(const std::string& label, const std::string& request_id);
nlohmann::json generate_response(const std::string& image_b64, const std::string& request_id);

TransitionDecision decode_stc_response(const nlohmann::json& j);
std::string decode_predict_response(const nlohmann::json& j);
std::string decode_generate_response(const nlohmann::json& j);

// {"error": <code>, "reason": <message>}
nlohmann::json error_body(std::string_view code, const std::string& reason);
std::optional<Errc> errc_from_string(std::string_view name);

std::string encode_image(const ImageBuffer& image);
ImageBuffer decode_image(const std::string& b64);

}  // namespace mstp::protocol
