#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace mstp {

/// One hierarchical state tuple (s^1, ..., s^L), coarse to fine. Levels are
/// addressed 1-based throughout the public API.
struct StateVector {
  std::vector<std::string> labels;

  std::size_t depth() const noexcept { return labels.size(); }
  const std::string& at(std::size_t level) const { return labels.at(level - 1); }
  std::string& at(std::size_t level) { return labels.at(level - 1); }

  friend bool operator==(const StateVector&, const StateVector&) = default;
};

// "A|b|c"-style rendering for logs and tables.
std::string to_display(const StateVector& state);

struct LevelDescriptor {
  std::string name;
  std::vector<std::string> labels;
  // Allowed labels of the next finer level, keyed by a label of this level.
  std::map<std::string, std::vector<std::string>> children;

  friend bool operator==(const LevelDescriptor&, const LevelDescriptor&) = default;
};

/// Hierarchical label space with a containment map between adjacent levels.
/// Construction validates the schema and throws Error(InvalidSchema).
class LevelSchema {
 public:
  explicit LevelSchema(std::vector<LevelDescriptor> levels);

  std::size_t depth() const noexcept { return levels_.size(); }
  const LevelDescriptor& level(std::size_t level) const { return levels_.at(level - 1); }
  const std::vector<LevelDescriptor>& levels() const noexcept { return levels_; }

  bool contains(std::size_t level, const std::string& label) const;

  // Children at level+1 of `label` at `level`; empty when the label has none.
  std::span<const std::string> children(std::size_t level, const std::string& label) const;

  // The label set an agent at `level` may choose from, given the label
  // already assembled for the parent level (ignored for level 1).
  std::span<const std::string> allowed_labels(std::size_t level,
                                              const std::string& parent_label) const;

  // Stable hex digest of the canonical JSON form; shared by client and server
  // to detect schema drift.
  const std::string& digest() const noexcept { return digest_; }

  friend bool operator==(const LevelSchema& a, const LevelSchema& b) { return a.levels_ == b.levels_; }

 private:
  std::vector<LevelDescriptor> levels_;
  std::vector<std::unordered_set<std::string>> members_;
  std::string digest_;
};

struct ValidationResult {
  enum class Violation { None, WrongDepth, UnknownLabel, Containment };

  Violation violation = Violation::None;
  std::size_t level = 0;  // first offending level (1-based), 0 when ok
  std::string message;

  bool ok() const noexcept { return violation == Violation::None; }
  explicit operator bool() const noexcept { return ok(); }
};

ValidationResult validate_state(const LevelSchema& schema, const StateVector& state);

// Throws Error(InvalidState) carrying `context` and the violation message.
void require_valid(const LevelSchema& schema, const StateVector& state, const std::string& context);

void to_json(nlohmann::json& j, const StateVector& state);
void from_json(const nlohmann::json& j, StateVector& state);

nlohmann::json schema_to_json(const LevelSchema& schema);
LevelSchema schema_from_json(const nlohmann::json& j);

LevelSchema load_schema(const std::filesystem::path& path);
void save_schema(const LevelSchema& schema, const std::filesystem::path& path);

}  // namespace mstp
