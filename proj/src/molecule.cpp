#include "qmscat/molecule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qmscat/io.hpp"
#include "qmscat/numeric.hpp"

namespace qmscat {

int Molecule::total_charge() const {
  int z = 0;
  for (const auto& a : atoms) z += a.charge;
  return z;
}

double Molecule::diameter() const {
  double d = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k)
    for (std::size_t l = k + 1; l < atoms.size(); ++l)
      d = std::max(d, (atoms[k].position - atoms[l].position).norm());
  return d;
}

Eigen::Vector2d Molecule::centroid() const {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& a : atoms) c += a.position;
  return c / static_cast<double>(atoms.size());
}

void validate_molecule(const Molecule& m) {
  if (m.atoms.empty())
    throw std::domain_error("molecule '" + m.id + "' has no atoms");
  for (const auto& a : m.atoms) {
    if (a.charge < 1)
      throw std::domain_error("molecule '" + m.id + "' has charge < 1");
    if (!a.position.allFinite())
      throw std::domain_error("molecule '" + m.id +
                              "' has non-finite position");
  }
  for (std::size_t k = 0; k < m.atoms.size(); ++k)
    for (std::size_t l = k + 1; l < m.atoms.size(); ++l)
      if (m.atoms[k].position == m.atoms[l].position)
        throw std::domain_error("molecule '" + m.id +
                                "' has coincident atoms");
}

std::vector<int> canonical_atom_order(const Molecule& m) {
  std::vector<int> order(m.atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& pa = m.atoms[a];
    const auto& pb = m.atoms[b];
    if (pa.charge != pb.charge) return pa.charge < pb.charge;
    if (pa.position.x() != pb.position.x())
      return pa.position.x() < pb.position.x();
    return pa.position.y() < pb.position.y();
  });
  return order;
}

double nuclear_repulsion(const Molecule& m) {
  validate_molecule(m);
  const auto order = canonical_atom_order(m);
  double e = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& a = m.atoms[order[i]];
      const auto& b = m.atoms[order[j]];
      e += static_cast<double>(a.charge) * static_cast<double>(b.charge) /
           (a.position - b.position).norm();
    }
  }
  return e;
}

int Dataset::fold(const std::string& id) const {
  const auto it = fold_of.find(id);
  if (it == fold_of.end())
    throw std::logic_error("no fold assigned for molecule '" + id + "'");
  return it->second;
}

std::vector<int> Dataset::fold_sizes(int n_folds) const {
  std::vector<int> sizes(n_folds, 0);
  for (const auto& [id, f] : fold_of) {
    if (f < 0 || f >= n_folds)
      throw std::logic_error("fold index out of range for '" + id + "'");
    ++sizes[f];
  }
  return sizes;
}

namespace {

void assign_missing_folds(Dataset& ds, const LoadOptions& opts) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < ds.molecules.size(); ++i)
    if (!ds.fold_of.count(ds.molecules[i].id)) pending.push_back(i);
  if (pending.empty()) return;

  if (opts.stratify_by_size) {
    std::stable_sort(pending.begin(), pending.end(),
                     [&](std::size_t a, std::size_t b) {
                       return ds.molecules[a].atoms.size() <
                              ds.molecules[b].atoms.size();
                     });
  }
  std::mt19937_64 rng(derive_seed(opts.fold_seed, 0));
  std::shuffle(pending.begin(), pending.end(), rng);
  if (opts.stratify_by_size) {
    // Shuffle breaks ties randomly; regroup by size so each fold samples
    // evenly across molecule sizes.
    std::stable_sort(pending.begin(), pending.end(),
                     [&](std::size_t a, std::size_t b) {
                       return ds.molecules[a].atoms.size() <
                              ds.molecules[b].atoms.size();
                     });
  }
  for (std::size_t i = 0; i < pending.size(); ++i)
    ds.fold_of[ds.molecules[pending[i]].id] =
        static_cast<int>(i % static_cast<std::size_t>(opts.n_folds));
}

void finish_dataset(Dataset& ds, const LoadOptions& opts) {
  if (ds.molecules.empty()) throw std::runtime_error("dataset is empty");
  std::set<std::string> ids;
  for (const auto& m : ds.molecules) {
    validate_molecule(m);
    if (!ids.insert(m.id).second)
      throw std::runtime_error("duplicate molecule id '" + m.id + "'");
  }
  for (const auto& [id, f] : ds.fold_of) {
    if (!ids.count(id))
      throw std::runtime_error("fold entry for unknown molecule '" + id + "'");
    if (f < 0 || f >= opts.n_folds)
      throw std::runtime_error("fold index out of range for '" + id + "'");
  }
  assign_missing_folds(ds, opts);
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse number '" + s + "' in " + context);
  }
}

int parse_int(const std::string& s, const std::string& context) {
  const double v = parse_double(s, context);
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 1e-9)
    throw std::runtime_error("expected integer, got '" + s + "' in " + context);
  return i;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string context = path.string() + ":" + std::to_string(line_no);
    const auto fields = io::split_csv_line(line);
    if (fields.size() < 2)
      throw std::runtime_error("malformed row in " + context);
    Molecule m;
    m.id = fields[0];
    const int n = parse_int(fields[1], context);
    if (n < 1) throw std::runtime_error("n_atoms < 1 in " + context);
    const std::size_t need = 2 + static_cast<std::size_t>(3 * n);
    if (fields.size() < need)
      throw std::runtime_error("row too short for " + std::to_string(n) +
                               " atoms in " + context);
    m.atoms.resize(n);
    for (int k = 0; k < n; ++k)
      m.atoms[k].charge = parse_int(fields[2 + k], context);
    for (int k = 0; k < n; ++k) {
      m.atoms[k].position.x() = parse_double(fields[2 + n + 2 * k], context);
      m.atoms[k].position.y() =
          parse_double(fields[2 + n + 2 * k + 1], context);
    }
    std::size_t pos = need;
    if (pos < fields.size() && !fields[pos].empty())
      m.energy = parse_double(fields[pos], context);
    ++pos;
    if (pos < fields.size() && !fields[pos].empty())
      ds.fold_of[m.id] = parse_int(fields[pos], context);
    ds.molecules.push_back(std::move(m));
  }
  return ds;
}

Dataset load_json_file(const std::filesystem::path& path) {
  const auto j = io::read_json(path);
  Dataset ds;
  for (const auto& jm : j.at("molecules")) {
    Molecule m;
    m.id = jm.at("id").get<std::string>();
    const auto& charges = jm.at("charges");
    const auto& positions = jm.at("positions");
    if (charges.size() != positions.size())
      throw std::runtime_error("charges/positions length mismatch for '" +
                               m.id + "'");
    m.atoms.resize(charges.size());
    for (std::size_t k = 0; k < m.atoms.size(); ++k) {
      m.atoms[k].charge = charges[k].get<int>();
      m.atoms[k].position.x() = positions[k].at(0).get<double>();
      m.atoms[k].position.y() = positions[k].at(1).get<double>();
    }
    if (jm.contains("energy") && !jm["energy"].is_null())
      m.energy = jm["energy"].get<double>();
    if (jm.contains("fold") && !jm["fold"].is_null())
      ds.fold_of[m.id] = jm["fold"].get<int>();
    ds.molecules.push_back(std::move(m));
  }
  return ds;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& opts) {
  Dataset ds = format == DatasetFormat::csv ? load_csv(path)
                                            : load_json_file(path);
  finish_dataset(ds, opts);
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path,
                  DatasetFormat format) {
  if (format == DatasetFormat::json) {
    io::json j;
    j["molecules"] = io::json::array();
    for (const auto& m : ds.molecules) {
      io::json jm;
      jm["id"] = m.id;
      jm["charges"] = io::json::array();
      jm["positions"] = io::json::array();
      for (const auto& a : m.atoms) {
        jm["charges"].push_back(a.charge);
        jm["positions"].push_back({a.position.x(), a.position.y()});
      }
      if (m.energy) jm["energy"] = *m.energy;
      const auto it = ds.fold_of.find(m.id);
      if (it != ds.fold_of.end()) jm["fold"] = it->second;
      j["molecules"].push_back(std::move(jm));
    }
    io::write_json(path, j);
    return;
  }
  std::ostringstream out;
  out.precision(17);
  for (const auto& m : ds.molecules) {
    out << m.id << ',' << m.atoms.size();
    for (const auto& a : m.atoms) out << ',' << a.charge;
    for (const auto& a : m.atoms)
      out << ',' << a.position.x() << ',' << a.position.y();
    out << ',';
    if (m.energy) out << *m.energy;
    const auto it = ds.fold_of.find(m.id);
    if (it != ds.fold_of.end()) out << ',' << it->second;
    out << '\n';
  }
  io::write_text(path, out.str());
}

void require_targets(const Dataset& ds) {
  for (const auto& m : ds.molecules)
    if (!m.energy)
      throw std::runtime_error("molecule '" + m.id +
                               "' has no target energy; training requires "
                               "energies for every molecule");
}

}  // namespace qmscat
