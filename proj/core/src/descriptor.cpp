#include "mstp/descriptor.hpp"

#include <cstdlib>
#include <sstream>

#include "mstp/error.hpp"

namespace mstp {
namespace {

nlohmann::json parse_number_or_text(const std::string& text) {
  if (!text.empty()) {
    char* end = nullptr;
    const long long i = std::strtoll(text.c_str(), &end, 10);
    if (end && *end == '\0') return i;
    const double d = std::strtod(text.c_str(), &end);
    if (end && *end == '\0') return d;
  }
  return text;
}

// "0.3/0.4" becomes an array; anything else with '/' (paths, URLs) stays a
// string.
nlohmann::json parse_scalar(const std::string& text) {
  if (text.find('/') != std::string::npos) {
    nlohmann::json arr = nlohmann::json::array();
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, '/');) {
      auto v = parse_number_or_text(part);
      if (!v.is_number()) return text;
      arr.push_back(std::move(v));
    }
    if (!text.empty() && text.back() == '/') return text;
    return arr;
  }
  return parse_number_or_text(text);
}

struct SplitText {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::string bare;  // body without '=', if any
};

SplitText split_descriptor(const std::string& text) {
  SplitText out;
  const auto colon = text.find(':');
  out.kind = text.substr(0, colon);
  if (out.kind.empty()) throw Error(Errc::InvalidArgument, "empty backend descriptor");
  if (colon == std::string::npos) return out;
  const std::string body = text.substr(colon + 1);
  if (body.find('=') == std::string::npos) {
    out.bare = body;
    return out;
  }
  std::stringstream ss(body);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(Errc::InvalidArgument, "expected key=value in descriptor '" + text + "'");
    }
    out.params[item.substr(0, eq)] = parse_scalar(item.substr(eq + 1));
  }
  return out;
}

void require_number(const nlohmann::json& params, const char* key, double lo, double hi) {
  auto it = params.find(key);
  if (it == params.end()) return;
  if (!it->is_number() || it->get<double>() < lo || it->get<double>() > hi) {
    throw Error(Errc::InvalidArgument, std::string("parameter '") + key + "' out of range");
  }
}

void require_string(const nlohmann::json& params, const char* key, const std::string& kind) {
  auto it = params.find(key);
  if (it == params.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(Errc::InvalidArgument, kind + " backend needs '" + key + "'");
  }
}

}  // namespace

std::string to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::GroundTruth: return "ground_truth";
    case DecisionKind::Markov: return "markov";
    case DecisionKind::Noisy: return "noisy";
    case DecisionKind::Scripted: return "scripted";
    case DecisionKind::Remote: return "remote";
  }
  return "?";
}

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Identity: return "identity";
    case GeneratorKind::Passthrough: return "passthrough";
    case GeneratorKind::Noise: return "noise";
    case GeneratorKind::Remote: return "remote";
  }
  return "?";
}

DecisionBackendDescriptor parse_decision_descriptor(const std::string& text) {
  auto split = split_descriptor(text);
  DecisionBackendDescriptor desc;
  desc.params = std::move(split.params);
  const auto& k = split.kind;
  if (k == "oracle" || k == "ground_truth" || k == "gt") {
    if (!split.bare.empty() && split.bare != "gt" && split.bare != "ground_truth") {
      throw Error(Errc::InvalidArgument, "unknown oracle '" + split.bare + "'");
    }
    desc.kind = DecisionKind::GroundTruth;
  } else if (k == "noisy") {
    desc.kind = DecisionKind::Noisy;
    if (!split.bare.empty()) desc.params["p"] = parse_scalar(split.bare);
  } else if (k == "markov") {
    desc.kind = DecisionKind::Markov;
    if (!split.bare.empty()) desc.params["model"] = split.bare;
  } else if (k == "scripted") {
    desc.kind = DecisionKind::Scripted;
    if (!split.bare.empty()) desc.params["table"] = split.bare;
  } else if (k == "remote") {
    desc.kind = DecisionKind::Remote;
    if (!split.bare.empty()) desc.params["endpoint"] = split.bare;
  } else {
    throw Error(Errc::InvalidArgument, "unknown decision backend '" + k + "'");
  }
  validate(desc);
  return desc;
}

GeneratorDescriptor parse_generator_descriptor(const std::string& text) {
  auto split = split_descriptor(text);
  GeneratorDescriptor desc;
  desc.params = std::move(split.params);
  const auto& k = split.kind;
  if (k == "identity") {
    desc.kind = GeneratorKind::Identity;
  } else if (k == "passthrough") {
    desc.kind = GeneratorKind::Passthrough;
  } else if (k == "noise") {
    desc.kind = GeneratorKind::Noise;
    if (!split.bare.empty()) desc.params["sigma"] = parse_scalar(split.bare);
  } else if (k == "remote") {
    desc.kind = GeneratorKind::Remote;
    if (!split.bare.empty()) desc.params["endpoint"] = split.bare;
  } else {
    throw Error(Errc::InvalidArgument, "unknown generator '" + k + "'");
  }
  validate(desc);
  return desc;
}

void validate(const DecisionBackendDescriptor& desc) {
  const auto& p = desc.params;
  switch (desc.kind) {
    case DecisionKind::GroundTruth:
      break;
    case DecisionKind::Noisy: {
      auto it = p.find("p");
      if (it == p.end()) throw Error(Errc::InvalidArgument, "noisy backend needs 'p'");
      const auto probs = it->is_array() ? *it : nlohmann::json::array({*it});
      for (const auto& v : probs) {
        if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 1) {
          throw Error(Errc::InvalidArgument, "noisy error probabilities must lie in [0, 1]");
        }
      }
      require_number(p, "p_stc", 0, 1);
      if (auto m = p.find("mode"); m != p.end()) {
        if (!m->is_string() || (*m != "independent" && *m != "corrective")) {
          throw Error(Errc::InvalidArgument, "noisy mode must be independent or corrective");
        }
      }
      break;
    }
    case DecisionKind::Markov:
      if (!p.contains("model_json")) require_string(p, "model", "markov");
      break;
    case DecisionKind::Scripted:
      if (!p.contains("table_text")) require_string(p, "table", "scripted");
      break;
    case DecisionKind::Remote:
      require_string(p, "endpoint", "remote");
      require_number(p, "timeout_ms", 1, 1e9);
      require_number(p, "retries", 0, 100);
      require_number(p, "max_inflight", 1, 1e6);
      break;
  }
}

void validate(const GeneratorDescriptor& desc) {
  const auto& p = desc.params;
  switch (desc.kind) {
    case GeneratorKind::Identity:
    case GeneratorKind::Passthrough:
      break;
    case GeneratorKind::Noise:
      if (!p.contains("sigma")) throw Error(Errc::InvalidArgument, "noise generator needs 'sigma'");
      require_number(p, "sigma", 0, 1e9);
      break;
    case GeneratorKind::Remote:
      require_string(p, "endpoint", "remote");
      require_number(p, "timeout_ms", 1, 1e9);
      require_number(p, "retries", 0, 100);
      require_number(p, "max_inflight", 1, 1e6);
      break;
  }
}

}  // namespace mstp
