#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "it2lss/dissipativity.hpp"
#include "it2lss/errors.hpp"
#include "it2lss/fou_partition.hpp"
#include "it2lss/fuzzy_model.hpp"
#include "it2lss/linalg.hpp"
#include "it2lss/simulate.hpp"
#include "it2lss/synthesis.hpp"
#include "it2lss/trajectory.hpp"

namespace it2lss::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "'");
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

inline json read_json(const std::filesystem::path& p) {
  const std::string text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  write_text(p, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Schema helpers. Errors name the offending field as a JSON path.

template <class E = ConfigError>
void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  if (!obj.is_object()) throw E(path + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw E(path + ": unknown key '" + k + "'");
  }
}

template <class E = ConfigError>
const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) throw E(path + ": missing required field '" + key + "'");
  return obj.at(key);
}

template <class E = ConfigError>
double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw E(path + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw E(path + ": expected a finite number");
  return d;
}

template <class E = ConfigError>
double number_or(const json& obj, const char* key, double dflt, const std::string& path) {
  return obj.contains(key) ? get_number<E>(obj.at(key), path + "." + key) : dflt;
}

template <class E = ConfigError>
std::size_t count_or(const json& obj, const char* key, std::size_t dflt,
                     const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw E(path + "." + key + ": expected a nonnegative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

template <class E = ConfigError>
std::string string_or(const json& obj, const char* key, const std::string& dflt,
                      const std::string& path) {
  if (!obj.contains(key)) return dflt;
  if (!obj.at(key).is_string()) throw E(path + "." + key + ": expected a string");
  return obj.at(key).get<std::string>();
}

template <class E = ConfigError>
std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw E(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(get_number<E>(v[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrices: arrays of rows.

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

template <class E = InputError>
Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw E(path + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) throw E(path + ": expected an array of rows");
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) {
      throw E(rp + ": expected a row of " + std::to_string(cols) + " numbers");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          get_number<E>(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model files

inline json to_json(const MembershipFn& f) {
  json j;
  std::visit(
      [&j](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MembershipFn::Triangular>) {
          j["type"] = "triangular";
          j["params"] = {s.a, s.b, s.c};
        } else if constexpr (std::is_same_v<T, MembershipFn::Trapezoidal>) {
          j["type"] = "trapezoidal";
          j["params"] = {s.a, s.b, s.c, s.d};
        } else if constexpr (std::is_same_v<T, MembershipFn::Gaussian>) {
          j["type"] = "gaussian";
          j["params"] = {s.center, s.width};
        } else {
          j["type"] = "tabulated";
          j["breakpoints"] = s.breakpoints;
          j["grades"] = s.grades;
        }
      },
      f.shape());
  j["height"] = f.height();
  return j;
}

inline MembershipFn membership_from_json(const json& j, const std::string& path) {
  check_keys<InputError>(j, {"type", "params", "breakpoints", "grades", "height"}, path);
  const std::string type = string_or<InputError>(j, "type", "", path);
  const double h = number_or<InputError>(j, "height", 1.0, path);
  try {
    if (type == "tabulated") {
      return MembershipFn::tabulated(
          number_list<InputError>(require<InputError>(j, "breakpoints", path),
                                  path + ".breakpoints"),
          number_list<InputError>(require<InputError>(j, "grades", path),
                                  path + ".grades"),
          h);
    }
    const auto p = number_list<InputError>(require<InputError>(j, "params", path),
                                           path + ".params");
    auto need = [&](std::size_t n) {
      if (p.size() != n) {
        throw InputError(path + ".params: " + type + " needs " + std::to_string(n) +
                         " parameters");
      }
    };
    if (type == "triangular") {
      need(3);
      return MembershipFn::triangular(p[0], p[1], p[2], h);
    }
    if (type == "trapezoidal") {
      need(4);
      return MembershipFn::trapezoidal(p[0], p[1], p[2], p[3], h);
    }
    if (type == "gaussian") {
      need(2);
      return MembershipFn::gaussian(p[0], p[1], h);
    }
  } catch (const InputError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw InputError(path + ": " + what);
  }
  throw InputError(path + ".type: unknown membership type '" + type + "'");
}

inline json antecedents_to_json(const std::vector<Antecedent>& ants) {
  json a = json::array();
  for (const auto& ant : ants) {
    a.push_back({{"state", ant.state_index},
                 {"lower", to_json(ant.set.lower())},
                 {"upper", to_json(ant.set.upper())}});
  }
  return a;
}

inline std::vector<Antecedent> antecedents_from_json(const json& j,
                                                     const std::string& path) {
  if (!j.is_array()) throw InputError(path + ": expected an array");
  std::vector<Antecedent> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    check_keys<InputError>(j[k], {"state", "lower", "upper"}, p);
    const auto st = count_or<InputError>(j[k], "state", 0, p);
    auto lower = membership_from_json(require<InputError>(j[k], "lower", p), p + ".lower");
    auto upper = membership_from_json(require<InputError>(j[k], "upper", p), p + ".upper");
    try {
      out.push_back({st, IT2Set(std::move(lower), std::move(upper))});
    } catch (const InputError& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  return out;
}

// Only constant type-reduction weights are representable; the stored value
// is the lower weight of rule 0 at the origin.
inline json model_to_json(const LargeScaleSystem& sys) {
  json subs = json::array();
  json ctrls = json::array();
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto& s = sys.subsystem(i);
    json rules = json::array();
    for (const auto& r : s.rules()) {
      json inter = json::object();
      for (const auto& [k, m] : r.interconnections) inter[std::to_string(k)] = to_json(m);
      rules.push_back({{"A", to_json(r.A)},
                       {"B", to_json(r.B)},
                       {"D1", to_json(r.D1)},
                       {"C", to_json(r.C)},
                       {"D2", to_json(r.D2)},
                       {"interconnections", inter},
                       {"antecedents", antecedents_to_json(r.antecedents)}});
    }
    const Vector zero = Vector::Zero(s.n());
    subs.push_back({{"n", s.n()},
                    {"m", s.m()},
                    {"m_w", s.m_w()},
                    {"n_z", s.n_z()},
                    {"alpha_lower", s.alpha()(zero, 0).lower},
                    {"rules", rules}});
    const auto& c = sys.controller(i);
    json crules = json::array();
    for (const auto& r : c.rules()) {
      crules.push_back({{"antecedents", antecedents_to_json(r.antecedents)}});
    }
    ctrls.push_back({{"beta_lower", c.beta()(zero, 0).lower}, {"rules", crules}});
  }
  return {{"subsystems", subs}, {"controllers", ctrls}};
}

inline LargeScaleSystem model_from_json(const json& j, const std::string& path = "model") {
  check_keys<InputError>(j, {"subsystems", "controllers"}, path);
  const auto& subs = require<InputError>(j, "subsystems", path);
  const auto& ctrls = require<InputError>(j, "controllers", path);
  if (!subs.is_array() || !ctrls.is_array()) {
    throw InputError(path + ": subsystems and controllers must be arrays");
  }
  std::vector<Subsystem> out_subs;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string p = path + ".subsystems[" + std::to_string(i) + "]";
    const auto& s = subs[i];
    check_keys<InputError>(s, {"n", "m", "m_w", "n_z", "alpha_lower", "rules"}, p);
    const auto n = static_cast<Index>(count_or<InputError>(s, "n", 0, p));
    const auto m = static_cast<Index>(count_or<InputError>(s, "m", 0, p));
    const auto mw = static_cast<Index>(count_or<InputError>(s, "m_w", 0, p));
    const auto nz = static_cast<Index>(count_or<InputError>(s, "n_z", 0, p));
    const double alpha = number_or<InputError>(s, "alpha_lower", 0.5, p);
    const auto& rj = require<InputError>(s, "rules", p);
    if (!rj.is_array()) throw InputError(p + ".rules: expected an array");
    std::vector<PlantRule> rules;
    for (std::size_t l = 0; l < rj.size(); ++l) {
      const std::string rp = p + ".rules[" + std::to_string(l) + "]";
      const auto& r = rj[l];
      check_keys<InputError>(r, {"A", "B", "D1", "C", "D2", "interconnections", "antecedents"},
                             rp);
      PlantRule rule;
      rule.A = matrix_from_json(require<InputError>(r, "A", rp), rp + ".A");
      rule.B = r.contains("B") ? matrix_from_json(r["B"], rp + ".B") : Matrix(Matrix::Zero(n, m));
      rule.D1 = r.contains("D1") ? matrix_from_json(r["D1"], rp + ".D1")
                                 : Matrix(Matrix::Zero(n, mw));
      rule.C = r.contains("C") ? matrix_from_json(r["C"], rp + ".C")
                               : Matrix(Matrix::Zero(nz, n));
      rule.D2 = r.contains("D2") ? matrix_from_json(r["D2"], rp + ".D2")
                                 : Matrix(Matrix::Zero(nz, mw));
      if (r.contains("interconnections")) {
        const auto& ic = r["interconnections"];
        if (!ic.is_object()) throw InputError(rp + ".interconnections: expected an object");
        for (const auto& [k, v] : ic.items()) {
          std::size_t key = 0;
          try {
            std::size_t pos = 0;
            key = std::stoul(k, &pos);
            if (pos != k.size()) throw std::invalid_argument(k);
          } catch (const std::exception&) {
            throw InputError(rp + ".interconnections: key '" + k +
                             "' is not a subsystem index");
          }
          rule.interconnections[key] =
              matrix_from_json(v, rp + ".interconnections." + k);
        }
      }
      if (r.contains("antecedents")) {
        rule.antecedents = antecedents_from_json(r["antecedents"], rp + ".antecedents");
      }
      rules.push_back(std::move(rule));
    }
    try {
      out_subs.emplace_back(i, n, m, mw, nz, std::move(rules), constant_realization(alpha));
    } catch (const InputError& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  std::vector<ControllerRuleBase> out_ctrls;
  for (std::size_t i = 0; i < ctrls.size(); ++i) {
    const std::string p = path + ".controllers[" + std::to_string(i) + "]";
    check_keys<InputError>(ctrls[i], {"beta_lower", "rules"}, p);
    const double beta = number_or<InputError>(ctrls[i], "beta_lower", 0.5, p);
    const auto& rj = require<InputError>(ctrls[i], "rules", p);
    if (!rj.is_array()) throw InputError(p + ".rules: expected an array");
    std::vector<ControllerRule> rules;
    for (std::size_t j = 0; j < rj.size(); ++j) {
      const std::string rp = p + ".rules[" + std::to_string(j) + "]";
      check_keys<InputError>(rj[j], {"antecedents"}, rp);
      rules.push_back({antecedents_from_json(require<InputError>(rj[j], "antecedents", rp),
                                             rp + ".antecedents")});
    }
    try {
      out_ctrls.emplace_back(std::move(rules), constant_realization(beta));
    } catch (const InputError& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  return LargeScaleSystem(std::move(out_subs), std::move(out_ctrls));
}

// ---------------------------------------------------------------------------
// Partitions. δ tables are flat in (l, j, corner, cell, z) order, cell ranges
// in (l, j, cell) order.

inline json partition_to_json(const FouPartition& part) {
  json subs = json::array();
  for (const auto& sp : part.subsystems) {
    json lo = json::array(), hi = json::array(), cmin = json::array(), cmax = json::array();
    for (std::size_t l = 0; l < sp.p(); ++l) {
      for (std::size_t j = 0; j < sp.c(); ++j) {
        for (std::size_t k = 0; k < sp.corners(); ++k) {
          for (std::size_t cell = 0; cell < sp.q(); ++cell) {
            for (std::size_t z = 0; z < sp.bands(); ++z) {
              lo.push_back(sp.delta_lower(l, j, k, cell, z));
              hi.push_back(sp.delta_upper(l, j, k, cell, z));
            }
          }
        }
        for (std::size_t cell = 0; cell < sp.q(); ++cell) {
          cmin.push_back(sp.cell_min(l, j, cell));
          cmax.push_back(sp.cell_max(l, j, cell));
        }
      }
    }
    subs.push_back({{"box",
                     {{"lower", sp.box().lower},
                      {"upper", sp.box().upper},
                      {"cells_per_dim", sp.box().cells_per_dim}}},
                    {"p", sp.p()},
                    {"c", sp.c()},
                    {"delta_lower", lo},
                    {"delta_upper", hi},
                    {"cell_min", cmin},
                    {"cell_max", cmax}});
  }
  return {{"options",
           {{"tau", part.options.tau},
            {"samples_per_cell", part.options.samples_per_cell},
            {"margin", part.options.margin}}},
          {"subsystems", subs}};
}

inline FouPartition partition_from_json(const json& j, const std::string& path = "partition") {
  check_keys<InputError>(j, {"options", "subsystems"}, path);
  FouPartition part;
  const auto& o = require<InputError>(j, "options", path);
  check_keys<InputError>(o, {"tau", "samples_per_cell", "margin"}, path + ".options");
  part.options.tau = count_or<InputError>(o, "tau", 0, path + ".options");
  part.options.samples_per_cell = count_or<InputError>(o, "samples_per_cell", 8, path + ".options");
  part.options.margin = number_or<InputError>(o, "margin", 1e-9, path + ".options");
  const auto& subs = require<InputError>(j, "subsystems", path);
  if (!subs.is_array()) throw InputError(path + ".subsystems: expected an array");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string p = path + ".subsystems[" + std::to_string(i) + "]";
    const auto& s = subs[i];
    check_keys<InputError>(s, {"box", "p", "c", "delta_lower", "delta_upper", "cell_min",
                               "cell_max"},
                           p);
    const auto& b = require<InputError>(s, "box", p);
    check_keys<InputError>(b, {"lower", "upper", "cells_per_dim"}, p + ".box");
    StateBox box;
    box.lower = number_list<InputError>(require<InputError>(b, "lower", p), p + ".box.lower");
    box.upper = number_list<InputError>(require<InputError>(b, "upper", p), p + ".box.upper");
    for (double v : number_list<InputError>(require<InputError>(b, "cells_per_dim", p),
                                            p + ".box.cells_per_dim")) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw InputError(p + ".box.cells_per_dim: expected positive integers");
      }
      box.cells_per_dim.push_back(static_cast<std::size_t>(v));
    }
    SubsystemPartition sp(box, count_or<InputError>(s, "p", 1, p),
                          count_or<InputError>(s, "c", 1, p), part.options.tau);
    const auto lo = number_list<InputError>(require<InputError>(s, "delta_lower", p), p + ".delta_lower");
    const auto hi = number_list<InputError>(require<InputError>(s, "delta_upper", p), p + ".delta_upper");
    const auto cmin = number_list<InputError>(require<InputError>(s, "cell_min", p), p + ".cell_min");
    const auto cmax = number_list<InputError>(require<InputError>(s, "cell_max", p), p + ".cell_max");
    const std::size_t n_delta = sp.p() * sp.c() * sp.corners() * sp.q() * sp.bands();
    const std::size_t n_cell = sp.p() * sp.c() * sp.q();
    if (lo.size() != n_delta || hi.size() != n_delta) {
      throw InputError(p + ": delta tables need " + std::to_string(n_delta) + " entries");
    }
    if (cmin.size() != n_cell || cmax.size() != n_cell) {
      throw InputError(p + ": cell ranges need " + std::to_string(n_cell) + " entries");
    }
    std::size_t f = 0, g = 0;
    for (std::size_t l = 0; l < sp.p(); ++l) {
      for (std::size_t jj = 0; jj < sp.c(); ++jj) {
        for (std::size_t k = 0; k < sp.corners(); ++k) {
          for (std::size_t cell = 0; cell < sp.q(); ++cell) {
            for (std::size_t z = 0; z < sp.bands(); ++z, ++f) {
              sp.set_delta(l, jj, k, cell, z, lo[f], hi[f]);
            }
          }
        }
        for (std::size_t cell = 0; cell < sp.q(); ++cell, ++g) {
          sp.set_cell_range(l, jj, cell, cmin[g], cmax[g]);
        }
      }
    }
    part.subsystems.push_back(std::move(sp));
  }
  return part;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Columns: t, x…, u…, z…, w…; channel names are <ch><i>_<r> with 1-based
// subsystem and component indices.
inline std::string trajectory_to_csv(const Trajectory& tr) {
  tr.validate();
  std::string out = "t";
  const std::pair<const char*, const std::vector<Matrix>*> chans[] = {
      {"x", &tr.x}, {"u", &tr.u}, {"z", &tr.z}, {"w", &tr.w}};
  for (const auto& [name, mats] : chans) {
    for (std::size_t i = 0; i < mats->size(); ++i) {
      for (Index r = 0; r < (*mats)[i].cols(); ++r) {
        out += std::string(",") + name + std::to_string(i + 1) + "_" + std::to_string(r + 1);
      }
    }
  }
  out += "\n";
  for (std::size_t s = 0; s < tr.samples(); ++s) {
    out += format_double(tr.t[s]);
    for (const auto& [name, mats] : chans) {
      for (const auto& m : *mats) {
        for (Index r = 0; r < m.cols(); ++r) {
          out += "," + format_double(m(static_cast<Index>(s), r));
        }
      }
    }
    out += "\n";
  }
  return out;
}

inline Trajectory trajectory_from_csv(const std::string& text,
                                      const std::string& source = "trajectory") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty file");
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  if (header.empty() || header[0] != "t") {
    throw InputError(source + ": first column must be 't'");
  }
  static const std::regex col(R"(([xuzw])(\d+)_(\d+))");
  // channel → subsystem → width, plus the column map.
  std::map<char, std::map<std::size_t, Index>> width;
  struct Col {
    char ch;
    std::size_t i;
    Index r;
  };
  std::vector<Col> cols;
  for (std::size_t k = 1; k < header.size(); ++k) {
    std::smatch mt;
    if (!std::regex_match(header[k], mt, col)) {
      throw InputError(source + ": unrecognized column '" + header[k] + "'");
    }
    const char ch = mt[1].str()[0];
    const std::size_t i = std::stoul(mt[2].str());
    const Index r = static_cast<Index>(std::stoul(mt[3].str()));
    if (i == 0 || r == 0) throw InputError(source + ": indices are 1-based");
    cols.push_back({ch, i - 1, r - 1});
    auto& w = width[ch][i - 1];
    w = std::max(w, r);
  }
  std::size_t n_sub = 0;
  for (const auto& [ch, m] : width) {
    if (!m.empty()) n_sub = std::max(n_sub, m.rbegin()->first + 1);
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw InputError(source + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(c, &pos));
        if (pos != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw InputError(source + ": line " + std::to_string(line_no) +
                         " has a non-numeric field '" + c + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  Trajectory tr;
  const auto k = static_cast<Index>(rows.size());
  auto alloc = [&](char ch, std::vector<Matrix>& dst) {
    dst.clear();
    for (std::size_t i = 0; i < n_sub; ++i) {
      Index w = 0;
      auto it = width[ch].find(i);
      if (it != width[ch].end()) w = it->second;
      dst.push_back(Matrix::Zero(k, w));
    }
  };
  alloc('x', tr.x);
  alloc('u', tr.u);
  alloc('z', tr.z);
  alloc('w', tr.w);
  for (Index s = 0; s < k; ++s) {
    const auto& row = rows[static_cast<std::size_t>(s)];
    tr.t.push_back(row[0]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& cc = cols[c];
      std::vector<Matrix>* dst = cc.ch == 'x' ? &tr.x : cc.ch == 'u' ? &tr.u
                                              : cc.ch == 'z' ? &tr.z : &tr.w;
      (*dst)[cc.i](s, cc.r) = row[c + 1];
    }
  }
  tr.validate();
  return tr;
}

// One row per (i, j): i, j, g_1 … g_(m·n) in row-major order; 1-based.
inline std::string gains_to_csv(const GainTable& g) {
  std::string out = "i,j,rows,cols,entries\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g[i].size(); ++j) {
      const Matrix& m = g[i][j];
      out += std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
             std::to_string(m.rows()) + "," + std::to_string(m.cols());
      for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
      }
      out += "\n";
    }
  }
  return out;
}

inline json gains_to_json(const GainTable& g) {
  json a = json::array();
  for (const auto& gi : g) {
    json row = json::array();
    for (const auto& gj : gi) row.push_back(to_json(gj));
    a.push_back(std::move(row));
  }
  return a;
}

template <class E = InputError>
GainTable gains_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw E(path + ": expected an array per subsystem");
  GainTable g;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) throw E(p + ": expected an array of gain matrices");
    std::vector<Matrix> gi;
    for (std::size_t k = 0; k < j[i].size(); ++k) {
      gi.push_back(matrix_from_json<E>(j[i][k], p + "[" + std::to_string(k) + "]"));
    }
    g.push_back(std::move(gi));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Reports

inline json matrices_to_json(const std::vector<Matrix>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back(to_json(m));
  return a;
}

inline json tally_to_json(const FamilyTally& t) {
  json fam = json::object();
  for (const auto& [k, v] : t.constraints) fam[k] = v;
  return {{"families", fam},
          {"total_constraints", t.total_constraints()},
          {"symmetric_vars", t.symmetric_vars},
          {"rectangular_vars", t.rectangular_vars},
          {"scalars", t.scalars}};
}

inline json solver_to_json(const lmi::SdpSolution& s, std::size_t blocks) {
  return {{"status", lmi::to_string(s.status)},
          {"margin", s.margin},
          {"outer_iterations", s.outer_iterations},
          {"newton_iterations", s.newton_iterations},
          {"blocks", blocks},
          {"message", s.message}};
}

// Wall-clock time is left out so reports stay byte-stable.
inline json synthesis_to_json(const SynthesisResult& r) {
  json audit = json::object();
  for (const auto& [k, a] : r.audit) {
    audit[k] = {{"count", a.count}, {"violated", a.violated}, {"min_margin", a.min_margin}};
  }
  json abar = json::array();
  for (const auto& row : r.abar) abar.push_back(row);
  json j = {{"formulation", to_string(r.formulation)},
            {"X", matrices_to_json(r.X)},
            {"M", matrices_to_json(r.M)},
            {"gains", gains_to_json(r.G)},
            {"x_condition", r.x_condition},
            {"warnings", r.warnings},
            {"interconnection_bounds", abar},
            {"coupling", r.coupling},
            {"tau", r.tau},
            {"audit", audit},
            {"audit_passed", r.audit_passed},
            {"tally", tally_to_json(r.tally)},
            {"solver", solver_to_json(r.solver, r.solver_blocks)}};
  if (!r.K.empty()) {
    j["K"] = matrices_to_json(r.K);
    j["p_minus_k_min_eig"] = r.p_minus_k_min_eig;
  }
  j["gamma"] = r.gamma ? json(*r.gamma) : json(nullptr);
  return j;
}

inline json bisection_to_json(const GammaResult& g) {
  json trace = json::array();
  for (const auto& s : g.trace) {
    trace.push_back(
        {{"gamma", s.gamma}, {"status", lmi::to_string(s.status)}, {"margin", s.margin}});
  }
  return {{"gamma_min", g.gamma_min},
          {"at_lower_bracket", g.at_lower_bracket},
          {"steps", g.trace.size()},
          {"monotone", trace_is_monotone(g.trace)},
          {"trace", trace}};
}

inline json certification_to_json(const Certification& c) {
  return {{"rho", c.rho},
          {"min_margin", c.min_margin},
          {"min_time", c.min_time},
          {"final_margin", c.margin.empty() ? 0.0 : c.margin.back()},
          {"passed", c.passed}};
}

inline json spec_to_json(const PerformanceSpec& s) {
  return {{"preset", to_string(s.preset)},
          {"gamma", s.gamma},
          {"phi", to_json(s.phi)},
          {"psi1", to_json(s.psi1)},
          {"psi2", to_json(s.psi2)},
          {"psi3", to_json(s.psi3)},
          {"rho", s.rho}};
}

}  // namespace it2lss::io
