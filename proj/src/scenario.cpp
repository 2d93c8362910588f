#include "forma/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace forma {

namespace {

using json = nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what);
}

const json& field(const json& obj, const std::string& key,
                  const std::string& path) {
  if (!obj.is_object()) {
    fail(path, "expected an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    fail(path + "." + key, "missing required field");
  }
  return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    fail(path, "expected a number");
  }
  const double x = j.get<double>();
  if (!std::isfinite(x)) {
    fail(path, "expected a finite number");
  }
  return x;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    fail(path, "expected an integer");
  }
  return j.get<int>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) {
    fail(path, "expected a string");
  }
  return j.get<std::string>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) {
    fail(path, "expected an array");
  }
  return j;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) {
    fail(path, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int k = 0; k < N; ++k) {
    v[k] = number(j[k], path + "[" + std::to_string(k) + "]");
  }
  return v;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

UavSpec parse_uav(const json& j, const std::string& path,
                  const LeaderPath& leader) {
  UavSpec u;
  u.id = text(field(j, "id", path), path + ".id");
  const std::string role = text(field(j, "role", path), path + ".role");
  try {
    u.role = parse_role(role);
  } catch (const std::invalid_argument& e) {
    fail(path + ".role", e.what());
  }
  u.initial.p = vec<3>(field(j, "position_m", path), path + ".position_m");
  u.limits.v_min = number(field(j, "v_min", path), path + ".v_min");
  u.limits.v_max = number(field(j, "v_max", path), path + ".v_max");
  u.limits.dv_max = number(field(j, "dv_max", path), path + ".dv_max");
  u.limits.yaw_rate_max =
      number(field(j, "yaw_rate_max_deg", path), path + ".yaw_rate_max_deg") *
      kDeg;
  u.limits.vz_max = number(field(j, "vz_max", path), path + ".vz_max");

  // Unless stated, vehicles start flying along the leader path.
  const Vec3& d = leader.direction;
  u.initial.psi = normalize_angle(std::atan2(d.y(), d.x()));
  if (const json* h = optional_field(j, "heading_deg")) {
    u.initial.psi = normalize_angle(number(*h, path + ".heading_deg") * kDeg);
  }
  u.initial.v = std::clamp(leader.speed, std::min(u.limits.v_min, u.limits.v_max),
                           std::max(u.limits.v_min, u.limits.v_max));
  if (const json* s = optional_field(j, "speed_mps")) {
    u.initial.v = number(*s, path + ".speed_mps");
  }
  return u;
}

LeaderPath parse_leader(const json& j, const std::string& path) {
  LeaderPath lp;
  lp.origin = vec<3>(field(j, "origin_m", path), path + ".origin_m");
  lp.speed = number(field(j, "velocity_mps", path), path + ".velocity_mps");
  const Vec3 dir = vec<3>(field(j, "direction", path), path + ".direction");
  if (!(dir.norm() > 0.0)) {
    fail(path + ".direction", "must be a nonzero vector");
  }
  lp.direction = dir.normalized();
  return lp;
}

}  // namespace

int Scenario::index_of(const std::string& id) const {
  for (int i = 0; i < size(); ++i) {
    if (uavs[i].id == id) {
      return i;
    }
  }
  return -1;
}

void Scenario::validate() const {
  if (uavs.empty()) {
    throw ValidationError("scenario needs at least one UAV");
  }
  std::set<std::string> ids;
  for (const UavSpec& u : uavs) {
    if (!ids.insert(u.id).second) {
      throw ValidationError("duplicate UAV id '" + u.id + "'");
    }
    const UavLimits& l = u.limits;
    if (!(l.v_min >= 0.0 && l.v_min <= l.v_max)) {
      throw ValidationError("UAV '" + u.id + "': need 0 <= v_min <= v_max");
    }
    if (!(l.dv_max > 0.0 && l.yaw_rate_max > 0.0 && l.vz_max > 0.0)) {
      throw ValidationError("UAV '" + u.id +
                            "': dv_max, yaw_rate_max_deg and vz_max must be "
                            "positive");
    }
    if (!(u.initial.v >= l.v_min && u.initial.v <= l.v_max)) {
      throw ValidationError("UAV '" + u.id +
                            "': initial speed outside [v_min, v_max]");
    }
  }

  for (const Radar& r : threats.radars) {
    if (!(r.detection_radius > 0.0)) {
      throw ValidationError("radar detection radius must be positive");
    }
  }
  for (const Missile& m : threats.missiles) {
    if (!(m.aperture > 0.0 && m.aperture < std::numbers::pi)) {
      throw ValidationError("missile aperture must lie in (0, 180) degrees");
    }
    if (index_of(m.jammer_id) < 0) {
      throw ValidationError("missile jammer '" + m.jammer_id +
                            "' is not a UAV");
    }
  }
  for (const Mountain& m : threats.mountains) {
    if (m.footprint.size() < 3 || !(m.height >= 0.0)) {
      throw ValidationError(
          "mountain needs >= 3 footprint vertices and height >= 0");
    }
  }

  for (const Assignment& a : assignments) {
    const int i = index_of(a.uav_id);
    if (i < 0) {
      throw ValidationError("assignment for unknown UAV '" + a.uav_id + "'");
    }
    const int count = a.kind == ThreatKind::radar
                          ? static_cast<int>(threats.radars.size())
                          : static_cast<int>(threats.missiles.size());
    if (a.index < 0 || a.index >= count) {
      throw ValidationError("assignment of '" + a.uav_id +
                            "' references a missing threat");
    }
    const UavRole want = a.kind == ThreatKind::radar
                             ? UavRole::radar_interference
                             : UavRole::missile_interference;
    if (uavs[i].role != want) {
      throw ValidationError("assignment of '" + a.uav_id +
                            "' does not match its role");
    }
  }

  if (formation.members.size() != uavs.size()) {
    throw ValidationError("formation members do not match the UAV roster");
  }
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    if (formation.members[i].id != uavs[i].id ||
        formation.members[i].role != uavs[i].role) {
      throw ValidationError("formation member " + std::to_string(i) +
                            " does not match the UAV roster");
    }
  }
  try {
    formation.validate();
  } catch (const ConfigurationError& e) {
    throw ValidationError(e.what());
  }
}

Scenario parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("$: ") + e.what());
  }
  if (!doc.is_object()) {
    fail("$", "expected an object");
  }

  Scenario sc;
  if (const json* n = optional_field(doc, "name")) {
    sc.name = text(*n, "$.name");
  }

  const json& form = field(doc, "formation", "$");
  const std::string fp = "$.formation";
  FormationSpec& spec = sc.formation;
  spec.leader = parse_leader(field(form, "leader_path", fp), fp + ".leader_path");

  const json& uavs = array(field(doc, "uavs", "$"), "$.uavs");
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    sc.uavs.push_back(parse_uav(uavs[i], at("$.uavs", i), spec.leader));
  }

  if (const json* radars = optional_field(doc, "radars")) {
    array(*radars, "$.radars");
    for (std::size_t i = 0; i < radars->size(); ++i) {
      const std::string p = at("$.radars", i);
      Radar r;
      r.position = vec<3>(field((*radars)[i], "position_m", p), p + ".position_m");
      r.detection_radius = number(field((*radars)[i], "detection_radius_m", p),
                                  p + ".detection_radius_m");
      sc.threats.radars.push_back(r);
    }
  }
  if (const json* missiles = optional_field(doc, "missiles")) {
    array(*missiles, "$.missiles");
    for (std::size_t i = 0; i < missiles->size(); ++i) {
      const std::string p = at("$.missiles", i);
      Missile m;
      m.position =
          vec<3>(field((*missiles)[i], "position_m", p), p + ".position_m");
      m.aperture =
          number(field((*missiles)[i], "aperture_deg", p), p + ".aperture_deg") *
          kDeg;
      m.jammer_id = text(field((*missiles)[i], "jammer_id", p), p + ".jammer_id");
      sc.threats.missiles.push_back(m);
    }
  }
  if (const json* mountains = optional_field(doc, "mountains")) {
    array(*mountains, "$.mountains");
    for (std::size_t i = 0; i < mountains->size(); ++i) {
      const std::string p = at("$.mountains", i);
      Mountain m;
      const json& fp_json =
          array(field((*mountains)[i], "footprint", p), p + ".footprint");
      for (std::size_t k = 0; k < fp_json.size(); ++k) {
        m.footprint.push_back(vec<2>(fp_json[k], at(p + ".footprint", k)));
      }
      m.height = number(field((*mountains)[i], "height_m", p), p + ".height_m");
      sc.threats.mountains.push_back(m);
    }
  }

  if (const json* assignments = optional_field(doc, "assignments")) {
    if (!assignments->is_object()) {
      fail("$.assignments", "expected an object");
    }
    for (const auto& [id, target] : assignments->items()) {
      const std::string p = "$.assignments." + id;
      if (!target.is_object() || target.size() != 1) {
        fail(p, "expected {\"radar\": i} or {\"missile\": i}");
      }
      Assignment a;
      a.uav_id = id;
      if (const json* r = optional_field(target, "radar")) {
        a.kind = ThreatKind::radar;
        a.index = integer(*r, p + ".radar");
      } else if (const json* m = optional_field(target, "missile")) {
        a.kind = ThreatKind::missile;
        a.index = integer(*m, p + ".missile");
      } else {
        fail(p, "expected {\"radar\": i} or {\"missile\": i}");
      }
      sc.assignments.push_back(a);
    }
  }

  // Formation: offsets, grouped weights, control weighting and options.
  const json& offsets = field(form, "offsets_m", fp);
  const json& weights = field(form, "weights", fp);
  if (!weights.is_object()) {
    fail(fp + ".weights", "expected an object keyed by role");
  }
  for (const auto& [role, group] : weights.items()) {
    try {
      parse_role(role);
    } catch (const std::invalid_argument& e) {
      fail(fp + ".weights." + role, e.what());
    }
    if (!group.is_object()) {
      fail(fp + ".weights." + role, "expected an object keyed by UAV id");
    }
    for (const auto& [id, w] : group.items()) {
      const int i = sc.index_of(id);
      if (i < 0) {
        throw ValidationError("weights." + role + " names unknown UAV '" + id +
                              "'");
      }
      if (to_string(sc.uavs[i].role) != role) {
        throw ValidationError("weight for '" + id + "' is listed under role " +
                              role + " but the UAV is " +
                              to_string(sc.uavs[i].role));
      }
      number(w, fp + ".weights." + role + "." + id);
    }
  }
  const Vec3 diag = vec<3>(field(form, "control_weight_diag", fp),
                           fp + ".control_weight_diag");
  spec.d_min = number(field(form, "d_min_m", fp), fp + ".d_min_m");
  spec.r_max = number(field(form, "r_max_m", fp), fp + ".r_max_m");
  if (const json* f = optional_field(form, "jammer_standoff_fraction")) {
    spec.jammer_standoff_fraction =
        number(*f, fp + ".jammer_standoff_fraction");
  }
  if (const json* c = optional_field(form, "cone_sense")) {
    try {
      spec.cone_sense = parse_cone_sense(text(*c, fp + ".cone_sense"));
    } catch (const std::invalid_argument& e) {
      fail(fp + ".cone_sense", e.what());
    }
  }
  std::optional<double> keep_out_margin;
  if (const json* k = optional_field(form, "jammer_keep_out_margin_m")) {
    keep_out_margin = number(*k, fp + ".jammer_keep_out_margin_m");
  }

  for (const UavSpec& u : sc.uavs) {
    FormationMember m;
    m.id = u.id;
    m.role = u.role;
    const std::string op = fp + ".offsets_m";
    m.offset = vec<3>(field(offsets, u.id, op), op + "." + u.id);
    const std::string role = to_string(u.role);
    const json* group = optional_field(weights, role);
    if (group == nullptr || !group->contains(u.id)) {
      throw ValidationError("no weight for UAV '" + u.id + "' under role " +
                            role);
    }
    m.weight = (*group)[u.id].get<double>();
    m.control_weight = diag.asDiagonal();
    spec.members.push_back(m);
  }

  std::map<std::string, int> id_index;
  for (int i = 0; i < sc.size(); ++i) {
    id_index[sc.uavs[i].id] = i;
  }
  if (const json* topo = optional_field(form, "topology")) {
    array(*topo, fp + ".topology");
    for (std::size_t k = 0; k < topo->size(); ++k) {
      const std::string p = at(fp + ".topology", k);
      const json& e = (*topo)[k];
      if (!e.is_array() || e.size() != 2) {
        fail(p, "expected a pair of UAV ids");
      }
      const std::string a = text(e[0], p + "[0]");
      const std::string b = text(e[1], p + "[1]");
      if (!id_index.count(a) || !id_index.count(b)) {
        throw ValidationError("topology edge " + a + "-" + b +
                              " names an unknown UAV");
      }
      spec.topology.emplace_back(std::min(id_index[a], id_index[b]),
                                 std::max(id_index[a], id_index[b]));
    }
  } else {
    spec.topology = complete_topology(sc.size());
  }

  // Jamming geometry needs validated threat indices.
  sc.validate();
  for (const Assignment& a : sc.assignments) {
    FormationMember& m = sc.formation.members[sc.index_of(a.uav_id)];
    if (a.kind == ThreatKind::radar) {
      const Radar& r = sc.threats.radars[a.index];
      const double margin =
          keep_out_margin
              ? *keep_out_margin
              : default_keep_out_margin(sc.uavs[sc.index_of(a.uav_id)].limits);
      m.jam = JammerTarget{r.position, r.detection_radius + margin};
    } else {
      const Missile& ms = sc.threats.missiles[a.index];
      if (ms.jammer_id != a.uav_id) {
        throw ValidationError("missile " + std::to_string(a.index) +
                              " names jammer '" + ms.jammer_id +
                              "' but is assigned to '" + a.uav_id + "'");
      }
      m.jam = JammerTarget{ms.position, 0.0};
    }
  }
  return sc;
}

double default_keep_out_margin(const UavLimits& limits) {
  return kDefaultJammerKeepOutMargin +
         2.0 * limits.v_min / limits.yaw_rate_max;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open scenario file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace forma
