#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace forceinfer {

// Echelons of the part-of hierarchy, lowest first. "array" is the company /
// battery / missile-site echelon built directly from vehicles.
enum class Level { vehicle = 0, array = 1, battalion = 2, regiment = 3, division = 4 };

inline constexpr int kLevelCount = 5;

std::string_view to_string(Level level);
std::optional<Level> level_from_string(std::string_view name);
std::optional<Level> level_below(Level level);
std::optional<Level> level_above(Level level);

struct ForceType {
  std::string name;
  Level level = Level::vehicle;
  std::optional<std::string> isa_parent;
};

struct ComponentSlot {
  std::string required_type;
  int count_min = 1;
  int count_max = 1;
};

// Pairwise geometry between the members of two slots (or within one slot when
// both indices are equal).
struct DeploymentConstraint {
  std::size_t slot_a = 0;
  std::size_t slot_b = 0;
  double distance_min = 0.0;
  double distance_max = 0.0;
  // Maximum heading difference between the two members, degrees.
  std::optional<double> bearing_tolerance;
};

struct ForceModel {
  std::string name;
  std::string models_type;
  std::vector<ComponentSlot> slots;
  std::vector<DeploymentConstraint> constraints;
  double prior = 0.5;
};

struct SeparationRule {
  std::string type_a;
  std::string type_b;
  double min_distance = 0.0;
};

struct OrientationRule {
  std::string type_a;
  std::string type_b;
  double max_heading_difference = 180.0;
};

struct DoctrineConfig {
  std::vector<SeparationRule> min_separation;
  std::vector<OrientationRule> orientation;
};

// Immutable after construction. All lookups are by type / model name.
class ModelLibrary {
 public:
  ModelLibrary() = default;

  // Validates every invariant; throws ValidationError naming the first failure.
  ModelLibrary(std::vector<ForceType> types, std::vector<ForceModel> models, DoctrineConfig doctrine);

  const std::vector<ForceType>& types() const { return types_; }
  const std::vector<ForceModel>& models() const { return models_; }
  const DoctrineConfig& doctrine() const { return doctrine_; }

  bool has_type(std::string_view name) const;
  const ForceType& type(std::string_view name) const;
  const ForceModel* find_model(std::string_view name) const;

  // Models whose modelled type sits at `level`, in declaration order.
  std::vector<const ForceModel*> models_at(Level level) const;

  // [t, parent, ..., root]
  std::vector<std::string> isa_ancestors(std::string_view type_name) const;
  bool subsumes(std::string_view general, std::string_view specific) const;

  // Largest doctrine minimum separation that applies to the pair, if any.
  std::optional<double> min_separation(std::string_view a, std::string_view b) const;
  // Tightest orientation limit that applies to the pair, if any.
  std::optional<double> max_heading_difference(std::string_view a, std::string_view b) const;
  // Smallest separation across all doctrine rules; used as a default scoring radius.
  std::optional<double> smallest_separation() const;

 private:
  void validate() const;
  template <typename Rule>
  bool rule_applies(const Rule& rule, std::string_view a, std::string_view b) const;

  std::vector<ForceType> types_;
  std::vector<ForceModel> models_;
  DoctrineConfig doctrine_;
  std::map<std::string, std::size_t, std::less<>> type_index_;
  std::map<std::string, std::size_t, std::less<>> model_index_;
};

// JSON library document with top-level keys "types", "models", "doctrine".
// Unknown keys are rejected. Throws ParseError or ValidationError.
ModelLibrary load_library(std::string_view text);
ModelLibrary load_library_file(const std::string& path);

}  // namespace forceinfer
