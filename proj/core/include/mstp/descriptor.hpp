#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace mstp {

enum class DecisionKind { GroundTruth, Markov, Noisy, Scripted, Remote };
enum class GeneratorKind { Identity, Passthrough, Noise, Remote };

/// Which decision backend to build, plus its kind-specific parameters.
struct DecisionBackendDescriptor {
  DecisionKind kind = DecisionKind::GroundTruth;
  nlohmann::json params = nlohmann::json::object();
};

struct GeneratorDescriptor {
  GeneratorKind kind = GeneratorKind::Identity;
  nlohmann::json params = nlohmann::json::object();
};

// Text forms used by the CLI and config files:
//
//   oracle:gt | ground_truth
//   noisy:p=0.3/0.4/0.5,mode=independent,seed=7[,p_stc=0.1]
//   markov:model=chain.json,seed=3       (markov:chain.json)
//   scripted:table=script.txt            (scripted:script.txt)
//   remote:endpoint=http://h:p,timeout_ms=500,retries=2,max_inflight=8
//                                        (remote:http://h:p)
//   identity | passthrough | noise:sigma=10,seed=1
//
// Values that parse as numbers become numbers; '/'-separated values become
// arrays. Missing or ill-typed parameters throw InvalidArgument.
DecisionBackendDescriptor parse_decision_descriptor(const std::string& text);
GeneratorDescriptor parse_generator_descriptor(const std::string& text);

std::string to_string(DecisionKind kind);
std::string to_string(GeneratorKind kind);

// Throws InvalidArgument when required parameters are missing or out of range.
void validate(const DecisionBackendDescriptor& desc);
void validate(const GeneratorDescriptor& desc);

}  // namespace mstp
