#include "mstp/protocol.hpp"

#include <array>

#include "mstp/image_io.hpp"

namespace mstp::protocol {
namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ProtocolError, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ProtocolError, std::string("field '") + key + "' has the wrong type");
  }
}

nlohmann::json header_json(const Header& h) {
  nlohmann::json j = {{"protocol_version", kVersion},
                      {"clip_id", h.clip_id},
                      {"step_k", h.step_k},
                      {"schema_digest", h.schema_digest}};
  if (!h.request_id.empty()) j["request_id"] = h.request_id;
  return j;
}

Header decode_header(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ProtocolError, "body is not an object");
  const auto version = field<std::string>(j, "protocol_version");
  if (version != kVersion) {
    throw Error(Errc::ProtocolError, "protocol version '" + version + "' is not supported");
  }
  Header h;
  h.clip_id = field<std::string>(j, "clip_id");
  h.step_k = field<std::int64_t>(j, "step_k");
  h.schema_digest = field<std::string>(j, "schema_digest");
  h.request_id = j.value("request_id", "");
  return h;
}

void echo_id(nlohmann::json& j, const std::string& request_id) {
  if (!request_id.empty()) j["request_id"] = request_id;
}

}  // namespace

nlohmann::json encode(const StcRequest& r) {
  auto j = header_json(r.header);
  j["state"] = r.state.labels;
  j["image"] = r.image;
  return j;
}

nlohmann::json encode(const PredictRequest& r) {
  auto j = header_json(r.header);
  j["partial_state"] = r.partial_state.labels;
  j["allowed_labels"] = r.allowed_labels;
  j["image"] = r.image;
  return j;
}

nlohmann::json encode(const GenerateRequest& r) {
  auto j = header_json(r.header);
  j["state"] = r.state.labels;
  j["image"] = r.image;
  return j;
}

StcRequest decode_stc_request(const nlohmann::json& j) {
  StcRequest r;
  r.header = decode_header(j);
  r.state.labels = field<std::vector<std::string>>(j, "state");
  r.image = field<std::string>(j, "image");
  return r;
}

PredictRequest decode_predict_request(const nlohmann::json& j, std::size_t level) {
  PredictRequest r;
  r.header = decode_header(j);
  r.level = level;
  r.partial_state.labels = field<std::vector<std::string>>(j, "partial_state");
  r.allowed_labels = field<std::vector<std::string>>(j, "allowed_labels");
  r.image = field<std::string>(j, "image");
  return r;
}

GenerateRequest decode_generate_request(const nlohmann::json& j) {
  GenerateRequest r;
  r.header = decode_header(j);
  r.state.labels = field<std::vector<std::string>>(j, "state");
  r.image = field<std::string>(j, "image");
  return r;
}

nlohmann::json stc_response(const TransitionDecision& decision, const std::string& request_id) {
  nlohmann::json j;
  if (decision.is_continue()) {
    j["decision"] = "continue";
  } else {
    j["decision"] = "transition";
    j["level"] = decision.level();
  }
  echo_id(j, request_id);
  return j;
}

nlohmann::json predict_response(const std::string& label, const std::string& request_id) {
  nlohmann::json j = {{"label", label}};
  echo_id(j, request_id);
  return j;
}

nlohmann::json generate_response(const std::string& image_b64, const std::string& request_id) {
  nlohmann::json j = {{"image", image_b64}};
  echo_id(j, request_id);
  return j;
}

TransitionDecision decode_stc_response(const nlohmann::json& j) {
  const auto decision = field<std::string>(j, "decision");
  if (decision == "continue") return TransitionDecision::continue_();
  if (decision == "transition") {
    const auto level = field<std::int64_t>(j, "level");
    if (level < 1) throw Error(Errc::InvariantViolation, "transition level must be >= 1");
    return TransitionDecision::at(static_cast<std::size_t>(level));
  }
  throw Error(Errc::ProtocolError, "unknown decision '" + decision + "'");
}

std::string decode_predict_response(const nlohmann::json& j) { return field<std::string>(j, "label"); }

std::string decode_generate_response(const nlohmann::json& j) { return field<std::string>(j, "image"); }

nlohmann::json error_body(std::string_view code, const std::string& reason) {
  return {{"error", code}, {"reason", reason}};
}

std::optional<Errc> errc_from_string(std::string_view name) {
  static constexpr std::array all = {
      Errc::InvalidArgument,    Errc::InvalidSchema,      Errc::InvalidState,     Errc::NonDivisorScale,
      Errc::NonPositiveDuration, Errc::ParseError,        Errc::IoError,          Errc::BackendUnavailable,
      Errc::ProtocolError,      Errc::InvalidAgentOutput, Errc::MissingRow,       Errc::MissingGroundTruth,
      Errc::DimensionMismatch,  Errc::ShapeMismatch,      Errc::MissingTruth,     Errc::NoOutputPoints,
      Errc::NoTransitions,      Errc::LengthMismatch,     Errc::EmptyInput,       Errc::TooSmallForScales,
      Errc::ZeroVector,         Errc::EmptyRanking,       Errc::SequenceTooShort, Errc::DegenerateInput,
      Errc::Timeout,            Errc::TransportError,     Errc::InvariantViolation, Errc::BindError};
  for (auto code : all) {
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

std::string encode_image(const ImageBuffer& image) {
  if (image.bit_depth() != 8) throw Error(Errc::InvalidArgument, "images cross the wire as 8-bit PNG");
  return base64_encode(encode_png(image));
}

ImageBuffer decode_image(const std::string& b64) {
  try {
    return decode_png(base64_decode(b64));
  } catch (const Error& e) {
    throw Error(Errc::ProtocolError, std::string("image payload: ") + e.what());
  }
}

}  // namespace mstp::protocol
