#pragma once

// JSON scenario files and CSV/JSON result files.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uavsec/bcd.hpp"
#include "uavsec/errors.hpp"
#include "uavsec/model.hpp"

namespace uavsec::io {

using Json = nlohmann::ordered_json;

struct ScenarioFile {
  Scenario scenario;
  double epsilon = 0.01;
  std::string description;
};

/// 12 significant digits, as used in every output file.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline double round12(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(fmt(x));
}

namespace detail {

inline const Json& require(const Json& obj, const std::string& parent, const std::string& key) {
  const std::string path = parent.empty() ? key : parent + "." + key;
  if (!obj.is_object()) throw ParseError("'" + parent + "' must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing required key '" + path + "'");
  return *it;
}

inline double number(const Json& obj, const std::string& parent, const std::string& key) {
  const Json& v = require(obj, parent, key);
  if (!v.is_number()) throw ParseError("'" + parent + "." + key + "' must be a number, got " + v.dump());
  return v.get<double>();
}

inline Vec2 point(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ParseError("'" + path + "' must be a two-element numeric array, got " + v.dump());
  return {v[0].get<double>(), v[1].get<double>()};
}

inline std::vector<Vec2> points(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError("'" + path + "' must be an array of points");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(point(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Builds a validated scenario from its JSON document.
inline ScenarioFile parse_scenario(const Json& doc) {
  using detail::number;
  using detail::require;
  ScenarioFile f;
  Scenario& s = f.scenario;
  if (!doc.is_object()) throw ParseError("scenario document must be a JSON object");
  if (auto it = doc.find("description"); it != doc.end() && it->is_string()) f.description = it->get<std::string>();

  const Json& nodes = require(doc, "", "nodes");
  s.users = detail::points(require(nodes, "nodes", "users"), "nodes.users");
  s.primaries = detail::points(require(nodes, "nodes", "primaries"), "nodes.primaries");
  const Json& eves = require(nodes, "nodes", "eves");
  if (!eves.is_array()) throw ParseError("'nodes.eves' must be an array");
  for (std::size_t m = 0; m < eves.size(); ++m) {
    const std::string path = "nodes.eves[" + std::to_string(m) + "]";
    Eavesdropper e;
    e.estimate = detail::point(require(eves[m], path, "pos_est"), path + ".pos_est");
    e.radius = number(eves[m], path, "radius_m");
    s.eves.push_back(e);
  }

  const Json& uav = require(doc, "", "uav");
  s.q_start = detail::point(require(uav, "uav", "start"), "uav.start");
  s.q_end = detail::point(require(uav, "uav", "end"), "uav.end");
  s.altitude = number(uav, "uav", "altitude_m");
  s.v_max = number(uav, "uav", "v_max_mps");
  s.p_max = number(uav, "uav", "p_max_w");

  const Json& radio = require(doc, "", "radio");
  s.radio.beta0 = db_to_linear(number(radio, "radio", "beta0_db"));
  s.radio.sigma2 = dbm_to_watts(number(radio, "radio", "sigma2_dbm"));
  s.radio.alpha = number(radio, "radio", "alpha");
  s.radio.pe = number(radio, "radio", "pe_w");

  const Json& limits = require(doc, "", "limits");
  const Json& gamma = require(limits, "limits", "gamma_it_dbm");
  auto gamma_w = [](const Json& v, const std::string& path) {
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ParseError("'" + path + "' must be a number or null, got " + v.dump());
    return dbm_to_watts(v.get<double>());
  };
  if (gamma.is_array()) {
    for (std::size_t r = 0; r < gamma.size(); ++r)
      s.gamma_it.push_back(gamma_w(gamma[r], "limits.gamma_it_dbm[" + std::to_string(r) + "]"));
  } else {
    s.gamma_it.assign(s.primaries.size(), gamma_w(gamma, "limits.gamma_it_dbm"));
  }
  s.see_min = number(limits, "limits", "see_min");
  f.epsilon = number(limits, "limits", "epsilon");
  if (!(f.epsilon > 0.0)) throw ValidationError("limits.epsilon must be positive, got " + fmt(f.epsilon));

  const Json& horizon = require(doc, "", "horizon");
  const double t = number(horizon, "horizon", "T_s");
  s.slot_len = number(horizon, "horizon", "slot_s");
  if (!(s.slot_len > 0.0)) throw ValidationError("horizon.slot_s must be positive, got " + fmt(s.slot_len));
  const double n = std::round(t / s.slot_len);
  if (!(n >= 1.0)) throw ValidationError("horizon.T_s / horizon.slot_s must round to at least 1 slot");
  s.n_slots = static_cast<std::size_t>(n);

  s.validate();
  return f;
}

inline ScenarioFile parse_scenario_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON at " + detail::line_context(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return parse_scenario(doc);
}

inline ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  return parse_scenario_text(detail::read_file(path));
}

inline Scenario load_scenario(const std::filesystem::path& path) { return load_scenario_file(path).scenario; }

inline Json point_json(const Vec2& p) { return Json::array({p.x(), p.y()}); }

/// Inverse of parse_scenario.
inline Json scenario_to_json(const Scenario& s, double epsilon, const std::string& description = "") {
  Json doc;
  if (!description.empty()) doc["description"] = description;
  Json users = Json::array(), prim = Json::array(), eves = Json::array();
  for (const auto& u : s.users) users.push_back(point_json(u));
  for (const auto& p : s.primaries) prim.push_back(point_json(p));
  for (const auto& e : s.eves) eves.push_back(Json{{"pos_est", point_json(e.estimate)}, {"radius_m", e.radius}});
  doc["nodes"] = Json{{"users", users}, {"primaries", prim}, {"eves", eves}};
  doc["uav"] = Json{{"start", point_json(s.q_start)},
                    {"end", point_json(s.q_end)},
                    {"altitude_m", s.altitude},
                    {"v_max_mps", s.v_max},
                    {"p_max_w", s.p_max}};
  doc["radio"] = Json{{"beta0_db", linear_to_db(s.radio.beta0)},
                      {"sigma2_dbm", watts_to_dbm(s.radio.sigma2)},
                      {"alpha", s.radio.alpha},
                      {"pe_w", s.radio.pe}};
  Json gamma = Json::array();
  for (double g : s.gamma_it) gamma.push_back(std::isinf(g) ? Json(nullptr) : Json(watts_to_dbm(g)));
  doc["limits"] = Json{{"gamma_it_dbm", gamma}, {"see_min", s.see_min}, {"epsilon", epsilon}};
  doc["horizon"] = Json{{"T_s", static_cast<double>(s.n_slots) * s.slot_len}, {"slot_s", s.slot_len}};
  return doc;
}

inline void write_scenario(const Scenario& s, double epsilon, const std::filesystem::path& path,
                           const std::string& description = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << scenario_to_json(s, epsilon, description).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Results

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline Json rounded(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

}  // namespace detail

/// Writes trajectory.csv, power.csv, secrecy_rate.csv, convergence.csv and
/// summary.json. `rates_by_scheme` adds comparison columns to secrecy_rate.csv.
inline void emit_results(const Solution& sol, const BcdTrace& trace, const Scenario& scen, const std::string& scheme,
                         const std::filesystem::path& out_dir,
                         const std::map<std::string, std::vector<double>>& rates_by_scheme = {}) {
  std::filesystem::create_directories(out_dir);
  const std::size_t n = sol.trajectory.size();
  {
    auto out = detail::open_out(out_dir / "trajectory.csv");
    out << "slot,x_m,y_m\n";
    for (std::size_t i = 0; i < n; ++i)
      out << i << "," << fmt(sol.trajectory.points[i].x()) << "," << fmt(sol.trajectory.points[i].y()) << "\n";
  }
  {
    auto out = detail::open_out(out_dir / "power.csv");
    out << "slot,watts\n";
    for (std::size_t i = 0; i < n; ++i) out << i << "," << fmt(sol.power.powers[i]) << "\n";
  }
  {
    auto out = detail::open_out(out_dir / "secrecy_rate.csv");
    out << "slot," << scheme;
    for (const auto& [name, _] : rates_by_scheme)
      if (name != scheme) out << "," << name;
    out << "\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << i << "," << fmt(sol.per_slot[i].rate_secrecy);
      for (const auto& [name, rates] : rates_by_scheme)
        if (name != scheme) out << "," << fmt(rates.at(i));
      out << "\n";
    }
  }
  {
    auto out = detail::open_out(out_dir / "convergence.csv");
    out << "iter,wasr\n";
    const auto hist = trace.wasr_history();
    for (std::size_t i = 0; i < hist.size(); ++i) out << i << "," << fmt(hist[i]) << "\n";
  }
  {
    const ConstraintAudit a = audit_solution(sol, scen);
    Json it = Json::array();
    for (double x : a.it) it.push_back(detail::rounded(x));
    Json summary;
    summary["scheme"] = scheme;
    summary["wasr"] = detail::rounded(sol.wasr);
    summary["see"] = sol.see ? detail::rounded(*sol.see) : Json(nullptr);
    summary["iterations"] = trace.records.size();
    summary["converged"] = trace.converged;
    summary["status"] = trace.status;
    summary["feasible"] = a.feasible();
    summary["residuals"] = Json{{"see", detail::rounded(a.see)},
                                {"power_box", detail::rounded(a.power_box)},
                                {"interference", it},
                                {"endpoints", detail::rounded(a.endpoints)},
                                {"speed", detail::rounded(a.speed)},
                                {"eve_exclusion", detail::rounded(a.eve_exclusion)},
                                {"max_violation", detail::rounded(a.max_violation())}};
    auto out = detail::open_out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
}

inline void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto out = detail::open_out(out_dir / "sweep.csv");
  out << "gamma_dbm,scheme,wasr,feasible,iterations,status\n";
  for (const auto& r : rows) {
    std::string status = r.status;
    for (char& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    out << (std::isinf(r.gamma_w) ? std::string("inf") : fmt(watts_to_dbm(r.gamma_w))) << "," << to_string(r.scheme)
        << "," << fmt(r.wasr) << "," << (r.feasible ? 1 : 0) << "," << r.iterations << "," << status << "\n";
  }
}

// ---------------------------------------------------------------------------
// CSV input for externally supplied solutions

namespace detail {

inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
      }
    }
    if (row.size() != columns)
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                       " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline Trajectory load_trajectory_csv(const std::filesystem::path& path) {
  Trajectory t;
  for (const auto& r : detail::read_numeric_csv(path, 3)) t.points.emplace_back(r[1], r[2]);
  return t;
}

inline PowerProfile load_power_csv(const std::filesystem::path& path) {
  PowerProfile p;
  for (const auto& r : detail::read_numeric_csv(path, 2)) p.powers.push_back(r[1]);
  return p;
}

}  // namespace uavsec::io
