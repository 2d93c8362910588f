#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forma/constraints.hpp"
#include "forma/formation.hpp"
#include "forma/uav.hpp"

namespace forma {

/// Malformed document; the message starts with the offending field path.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed document whose contents break an invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UavSpec {
  std::string id;
  UavRole role = UavRole::reconnaissance;
  UavState initial;
  UavLimits limits;
};

enum class ThreatKind { radar, missile };

struct Assignment {
  std::string uav_id;
  ThreatKind kind = ThreatKind::radar;
  int index = 0;
};

/**
 * A fully validated mission. formation.members is aligned with uavs, and
 * every missile's jammer_id names an existing vehicle.
 */
struct Scenario {
  std::string name;
  std::vector<UavSpec> uavs;
  ThreatSet threats;
  FormationSpec formation;
  std::vector<Assignment> assignments;

  int size() const { return static_cast<int>(uavs.size()); }
  /// Index of the vehicle with this id, or -1.
  int index_of(const std::string& id) const;

  /// Re-checks every invariant; throws ValidationError.
  void validate() const;
};

/// Parses and validates a scenario document.
Scenario parse_scenario(const std::string& json_text);

/// Reads a file and parses it. Missing files raise ValidationError naming
/// the path.
Scenario load_scenario(const std::string& path);

/// Clearance beyond a full loiter circle when placing a radar jammer.
inline constexpr double kDefaultJammerKeepOutMargin = 200.0;

/**
 * Default clearance added to a radar's detection radius for its jammer:
 * kDefaultJammerKeepOutMargin plus one minimum-speed turning diameter, so a
 * jammer that cannot slow below v_min can circle its target without
 * crossing into the sphere.
 */
double default_keep_out_margin(const UavLimits& limits);

}  // namespace forma
