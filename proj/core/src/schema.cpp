#include "mstp/schema.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mstp/error.hpp"
#include "mstp/random.hpp"

namespace mstp {

std::string to_display(const StateVector& state) {
  std::string out;
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    if (i) out += '|';
    out += state.labels[i];
  }
  return out;
}

LevelSchema::LevelSchema(std::vector<LevelDescriptor> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw Error(Errc::InvalidSchema, "schema needs at least one level");

  members_.resize(levels_.size());
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto& lvl = levels_[i];
    if (lvl.labels.empty()) {
      throw Error(Errc::InvalidSchema, "level " + std::to_string(i + 1) + " has no labels");
    }
    for (const auto& label : lvl.labels) {
      if (!members_[i].insert(label).second) {
        throw Error(Errc::InvalidSchema,
                    "duplicate label '" + label + "' at level " + std::to_string(i + 1));
      }
    }
  }

  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto& lvl = levels_[i];
    const bool finest = i + 1 == levels_.size();
    if (finest && !lvl.children.empty()) {
      throw Error(Errc::InvalidSchema, "finest level must not declare children");
    }
    if (finest) break;

    std::unordered_set<std::string> covered;
    for (const auto& [parent, kids] : lvl.children) {
      if (!members_[i].contains(parent)) {
        throw Error(Errc::InvalidSchema, "children declared for unknown label '" + parent +
                                             "' at level " + std::to_string(i + 1));
      }
      std::unordered_set<std::string> seen;
      for (const auto& kid : kids) {
        if (!members_[i + 1].contains(kid)) {
          throw Error(Errc::InvalidSchema, "child '" + kid + "' of '" + parent +
                                               "' is not a label of level " + std::to_string(i + 2));
        }
        if (!seen.insert(kid).second) {
          throw Error(Errc::InvalidSchema, "duplicate child '" + kid + "' under '" + parent + "'");
        }
        covered.insert(kid);
      }
    }
    for (const auto& label : levels_[i + 1].labels) {
      if (!covered.contains(label)) {
        throw Error(Errc::InvalidSchema, "label '" + label + "' at level " + std::to_string(i + 2) +
                                             " has no parent");
      }
    }
  }

  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(schema_to_json(*this).dump())));
  digest_ = buf;
}

bool LevelSchema::contains(std::size_t level, const std::string& label) const {
  return level >= 1 && level <= members_.size() && members_[level - 1].contains(label);
}

std::span<const std::string> LevelSchema::children(std::size_t level, const std::string& label) const {
  if (level < 1 || level >= levels_.size()) return {};
  const auto& map = levels_[level - 1].children;
  auto it = map.find(label);
  if (it == map.end()) return {};
  return it->second;
}

std::span<const std::string> LevelSchema::allowed_labels(std::size_t level,
                                                         const std::string& parent_label) const {
  if (level == 1) return levels_.front().labels;
  return children(level - 1, parent_label);
}

ValidationResult validate_state(const LevelSchema& schema, const StateVector& state) {
  using V = ValidationResult::Violation;
  if (state.depth() != schema.depth()) {
    return {V::WrongDepth, 0,
            "state has " + std::to_string(state.depth()) + " levels, schema has " +
                std::to_string(schema.depth())};
  }
  for (std::size_t level = 1; level <= schema.depth(); ++level) {
    const auto& label = state.at(level);
    if (!schema.contains(level, label)) {
      return {V::UnknownLabel, level,
              "label '" + label + "' is not in level " + std::to_string(level)};
    }
    if (level > 1) {
      const auto kids = schema.children(level - 1, state.at(level - 1));
      if (std::find(kids.begin(), kids.end(), label) == kids.end()) {
        return {V::Containment, level,
                "label '" + label + "' is not a child of '" + state.at(level - 1) + "'"};
      }
    }
  }
  return {};
}

void require_valid(const LevelSchema& schema, const StateVector& state, const std::string& context) {
  if (auto result = validate_state(schema, state); !result) {
    throw Error(Errc::InvalidState, context + ": " + result.message);
  }
}

void to_json(nlohmann::json& j, const StateVector& state) { j = state.labels; }

void from_json(const nlohmann::json& j, StateVector& state) {
  state.labels = j.get<std::vector<std::string>>();
}

nlohmann::json schema_to_json(const LevelSchema& schema) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lvl : schema.levels()) {
    nlohmann::json children = nlohmann::json::object();
    for (const auto& [parent, kids] : lvl.children) children[parent] = kids;
    levels.push_back({{"name", lvl.name}, {"labels", lvl.labels}, {"children", children}});
  }
  return {{"levels", levels}};
}

LevelSchema schema_from_json(const nlohmann::json& j) {
  try {
    std::vector<LevelDescriptor> levels;
    for (const auto& item : j.at("levels")) {
      LevelDescriptor lvl;
      lvl.name = item.value("name", "");
      lvl.labels = item.at("labels").get<std::vector<std::string>>();
      if (auto it = item.find("children"); it != item.end()) {
        lvl.children = it->get<std::map<std::string, std::vector<std::string>>>();
      }
      levels.push_back(std::move(lvl));
    }
    return LevelSchema(std::move(levels));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("schema: ") + e.what());
  }
}

LevelSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open schema " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const LevelSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write schema " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

}  // namespace mstp
