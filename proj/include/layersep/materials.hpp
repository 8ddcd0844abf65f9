#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "layersep/detail/text.hpp"
#include "layersep/errors.hpp"

namespace layersep {

/// Names one contacting face (sheet side, roller coating, table, ...).
using SurfaceId = std::string;

/// One flexible layer. youngs_modulus drives the buckling threshold;
/// stiffness_index is the relative stiffness fraction shipped with the
/// bundled database and is carried through untouched.
struct MaterialSheet {
  std::string name;
  double youngs_modulus = 0.0;  // Pa
  double thickness = 0.0;       // m
  double width = 0.0;           // m
  double stiffness_index = 0.0; // fraction in [0, 1]
  SurfaceId top_surface;
  SurfaceId bottom_surface;

  void validate() const {
    if (name.empty()) throw ValidationError("material with empty name");
    if (!(youngs_modulus > 0.0))
      throw ValidationError("material '" + name + "': youngs_modulus must be > 0");
    if (!(thickness > 0.0))
      throw ValidationError("material '" + name + "': thickness must be > 0");
    if (!(width > 0.0))
      throw ValidationError("material '" + name + "': width must be > 0");
    if (stiffness_index < 0.0 || stiffness_index > 1.0)
      throw ValidationError("material '" + name + "': stiffness_index must be in [0,1]");
    if (top_surface.empty() || bottom_surface.empty())
      throw ValidationError("material '" + name + "': surfaces must be named");
  }

  friend bool operator==(const MaterialSheet&, const MaterialSheet&) = default;
};

enum class Provenance { Paper, Assumed };

inline std::string to_string(Provenance p) {
  return p == Provenance::Paper ? "paper" : "assumed";
}

/// Symmetric friction-coefficient table over unordered surface pairs.
/// Keys are stored with the two names lexicographically sorted, so lookup
/// symmetry holds by construction.
class FrictionTable {
public:
  struct Entry {
    double mu = 0.0;
    Provenance provenance = Provenance::Assumed;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  using Key = std::pair<SurfaceId, SurfaceId>;

  static Key make_key(const SurfaceId& a, const SurfaceId& b) {
    return a <= b ? Key{a, b} : Key{b, a};
  }

  void insert(const SurfaceId& a, const SurfaceId& b, double mu,
              Provenance prov = Provenance::Assumed) {
    if (a.empty() || b.empty()) throw ValidationError("friction entry with empty surface name");
    if (!(mu > 0.0))
      throw ValidationError("friction entry (" + a + ", " + b + "): mu must be > 0, got " +
                            detail::format_double(mu));
    auto [it, fresh] = entries_.emplace(make_key(a, b), Entry{mu, prov});
    if (!fresh)
      throw ValidationError("duplicate friction entry for pair (" + a + ", " + b + ")");
    (void)it;
  }

  bool contains(const SurfaceId& a, const SurfaceId& b) const {
    return entries_.count(make_key(a, b)) > 0;
  }

  const Entry& entry(const SurfaceId& a, const SurfaceId& b) const {
    auto it = entries_.find(make_key(a, b));
    if (it == entries_.end()) throw UnknownPairError(a, b);
    return it->second;
  }

  const std::map<Key, Entry>& entries() const { return entries_; }

  friend bool operator==(const FrictionTable&, const FrictionTable&) = default;

private:
  std::map<Key, Entry> entries_;
};

/// mu for the (a, b) interface; symmetric in its arguments.
inline double friction_coefficient(const FrictionTable& table, const SurfaceId& a,
                                   const SurfaceId& b) {
  return table.entry(a, b).mu;
}

/// Two sheets on a substrate, top over bottom.
struct LayerStack {
  MaterialSheet top;
  MaterialSheet bottom;
  SurfaceId substrate;

  void validate() const {
    top.validate();
    bottom.validate();
    if (substrate.empty()) throw ValidationError("layer stack: substrate surface must be named");
  }
};

/// w*h^3/12 for a rectangular cross-section.
inline double second_moment_of_area(double w, double h) {
  if (!(w > 0.0)) throw ValidationError("second_moment_of_area: width must be > 0");
  if (!(h > 0.0)) throw ValidationError("second_moment_of_area: thickness must be > 0");
  return w * h * h * h / 12.0;
}

struct MaterialDb {
  std::vector<MaterialSheet> sheets;
  FrictionTable friction;

  const MaterialSheet& sheet(const std::string& name) const {
    auto it = std::find_if(sheets.begin(), sheets.end(),
                           [&](const MaterialSheet& m) { return m.name == name; });
    if (it == sheets.end()) throw ValidationError("no material named '" + name + "'");
    return *it;
  }

  friend bool operator==(const MaterialDb&, const MaterialDb&) = default;
};

namespace detail {

inline ParseError db_error(const std::string& path, std::size_t line, const std::string& msg) {
  return ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Reads the two-section material database. Format, one record per line:
///
///   [materials]
///   # name, youngs_modulus_pa, thickness_m, width_m, stiffness_index, top_surface, bottom_surface
///   bag-paper, 2e+09, 0.00012, 0.1, 0.957, bag-paper, bag-paper
///   [friction]
///   # surface_a, surface_b, mu, provenance   (provenance: paper | assumed)
///   bag-paper, bag-paper, 0.26, paper
///
/// '#' starts a comment; blank lines are skipped.
inline MaterialDb load_material_db(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open material database: " + path);

  MaterialDb db;
  enum class Section { None, Materials, Friction } section = Section::None;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line == "[materials]") { section = Section::Materials; continue; }
    if (line == "[friction]") { section = Section::Friction; continue; }
    if (line.front() == '[')
      throw detail::db_error(path, lineno, "unknown section " + std::string(line));

    auto fields = detail::split_fields(line);
    if (section == Section::Materials) {
      if (fields.size() != 7)
        throw detail::db_error(path, lineno, "expected 7 material fields, got " +
                                                 std::to_string(fields.size()));
      MaterialSheet m;
      m.name = fields[0];
      if (!detail::parse_double(fields[1], m.youngs_modulus) ||
          !detail::parse_double(fields[2], m.thickness) ||
          !detail::parse_double(fields[3], m.width) ||
          !detail::parse_double(fields[4], m.stiffness_index))
        throw detail::db_error(path, lineno, "malformed numeric field");
      m.top_surface = fields[5];
      m.bottom_surface = fields[6];
      try {
        m.validate();
      } catch (const ValidationError& e) {
        throw detail::db_error(path, lineno, e.what());
      }
      for (const auto& existing : db.sheets)
        if (existing.name == m.name)
          throw detail::db_error(path, lineno, "duplicate material name '" + m.name + "'");
      db.sheets.push_back(std::move(m));
    } else if (section == Section::Friction) {
      if (fields.size() != 4)
        throw detail::db_error(path, lineno, "expected 4 friction fields, got " +
                                                 std::to_string(fields.size()));
      double mu = 0.0;
      if (!detail::parse_double(fields[2], mu))
        throw detail::db_error(path, lineno, "malformed mu field '" + fields[2] + "'");
      Provenance prov;
      if (fields[3] == "paper") prov = Provenance::Paper;
      else if (fields[3] == "assumed") prov = Provenance::Assumed;
      else throw detail::db_error(path, lineno, "provenance must be 'paper' or 'assumed', got '" +
                                                    fields[3] + "'");
      try {
        db.friction.insert(fields[0], fields[1], mu, prov);
      } catch (const ValidationError& e) {
        throw detail::db_error(path, lineno, e.what());
      }
    } else {
      throw detail::db_error(path, lineno, "record before any [materials]/[friction] section");
    }
  }
  return db;
}

/// Writes the same format load_material_db reads; a written database re-reads
/// field-for-field equal.
inline void save_material_db(const MaterialDb& db, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << "[materials]\n";
  out << "# name, youngs_modulus_pa, thickness_m, width_m, stiffness_index, top_surface, bottom_surface\n";
  for (const auto& m : db.sheets) {
    out << m.name << ", " << detail::format_double(m.youngs_modulus) << ", "
        << detail::format_double(m.thickness) << ", " << detail::format_double(m.width) << ", "
        << detail::format_double(m.stiffness_index) << ", " << m.top_surface << ", "
        << m.bottom_surface << "\n";
  }
  out << "\n[friction]\n";
  out << "# surface_a, surface_b, mu, provenance\n";
  for (const auto& [key, entry] : db.friction.entries()) {
    out << key.first << ", " << key.second << ", " << detail::format_double(entry.mu) << ", "
        << to_string(entry.provenance) << "\n";
  }
  if (!out) throw ParseError("write failed: " + path);
}

}  // namespace layersep
