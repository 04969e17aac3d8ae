#include "qmscat/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qmscat/io.hpp"
#include "qmscat/numeric.hpp"

namespace qmscat::density {

std::string channel_name(Channel c) {
  switch (c) {
    case Channel::dirac: return "dirac";
    case Channel::atomic: return "atomic";
    case Channel::core: return "core";
    case Channel::valence: return "valence";
  }
  throw std::logic_error("bad channel");
}

Channel channel_from_name(const std::string& name) {
  if (name == "dirac") return Channel::dirac;
  if (name == "atomic") return Channel::atomic;
  if (name == "core") return Channel::core;
  if (name == "valence") return Channel::valence;
  throw std::invalid_argument("unknown density channel '" + name + "'");
}

ChannelSpec ChannelSpec::parse(const std::string& comma_separated) {
  ChannelSpec spec;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Channel c = channel_from_name(item);
    if (std::find(spec.channels.begin(), spec.channels.end(), c) !=
        spec.channels.end())
      throw std::invalid_argument("duplicate density channel '" + item + "'");
    spec.channels.push_back(c);
  }
  if (spec.channels.empty())
    throw std::invalid_argument("channel spec is empty");
  return spec;
}

std::string ChannelSpec::to_string() const {
  std::string s;
  for (const auto c : channels) {
    if (!s.empty()) s += ',';
    s += channel_name(c);
  }
  return s;
}

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

}  // namespace

double RadialProfile::mass_3d(const std::vector<double>& rho) const {
  std::vector<double> integrand(radius.size());
  for (std::size_t i = 0; i < radius.size(); ++i)
    integrand[i] = 4.0 * std::numbers::pi * radius[i] * radius[i] * rho[i];
  return trapezoid(radius, integrand);
}

void RadialProfile::validate() const {
  if (z < 1) throw std::domain_error("profile charge < 1");
  if (radius.size() < 2) throw std::domain_error("profile too short");
  if (radius.front() != 0.0)
    throw std::domain_error("profile radii must start at 0");
  for (std::size_t i = 1; i < radius.size(); ++i)
    if (!(radius[i] > radius[i - 1]))
      throw std::domain_error("profile radii must be strictly increasing");
  if (rho_total.size() != radius.size() || rho_core.size() != radius.size() ||
      rho_val.size() != radius.size())
    throw std::domain_error("profile column length mismatch");
  for (std::size_t i = 0; i < radius.size(); ++i) {
    if (rho_total[i] < 0.0 || rho_core[i] < 0.0 || rho_val[i] < 0.0)
      throw std::domain_error("negative density in profile");
    const double split_err = std::abs(rho_core[i] + rho_val[i] - rho_total[i]);
    if (split_err > 1e-6 * std::max(rho_total[i], 1e-300) &&
        split_err > 1e-12)
      throw std::domain_error("core + valence != total in profile");
  }
  const double mass = mass_3d(rho_total);
  if (std::abs(mass - z) > 1e-3 * z)
    throw std::domain_error("profile for z=" + std::to_string(z) +
                            " integrates to " + std::to_string(mass));
}

double RadialProfile2D::mass_2d(const std::vector<double>& rho) const {
  std::vector<double> integrand(radius.size());
  for (std::size_t i = 0; i < radius.size(); ++i)
    integrand[i] = 2.0 * std::numbers::pi * radius[i] * rho[i];
  return trapezoid(radius, integrand);
}

double RadialProfile2D::eval(const std::vector<double>& rho, double r) const {
  if (radius.empty() || r >= radius.back()) return 0.0;
  if (r <= 0.0) return rho.front();
  const auto it = std::upper_bound(radius.begin(), radius.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - radius.begin());
  const double t = (r - radius[i - 1]) / (radius[i] - radius[i - 1]);
  return rho[i - 1] + t * (rho[i] - rho[i - 1]);
}

RadialProfile2D restrict_to_2d(const RadialProfile& p) {
  p.validate();
  RadialProfile2D q;
  q.z = p.z;
  q.radius = p.radius;
  q.rho_total.resize(p.radius.size());
  q.rho_core.resize(p.radius.size());
  q.rho_val.resize(p.radius.size());
  for (std::size_t i = 0; i < p.radius.size(); ++i) {
    const double f = 2.0 * p.radius[i];
    q.rho_total[i] = f * p.rho_total[i];
    q.rho_core[i] = f * p.rho_core[i];
    q.rho_val[i] = f * p.rho_val[i];
  }
  return q;
}

int core_electron_count(int z) {
  if (z < 1) throw std::domain_error("charge < 1");
  if (z <= 2) return 0;
  if (z <= 10) return 2;
  if (z <= 18) return 10;
  throw std::domain_error("analytic profiles cover z <= 18 only");
}

RadialProfile analytic_profile(int z) {
  if (z < 1 || z > 18)
    throw std::domain_error("analytic profiles cover 1 <= z <= 18");
  constexpr int shell_cap[3] = {2, 8, 8};

  struct Shell {
    int occupancy;
    double width;
  };
  std::vector<Shell> shells;
  int remaining = z, inner = 0;
  for (int n = 1; remaining > 0; ++n) {
    const int occ = std::min(remaining, shell_cap[n - 1]);
    const double width =
        static_cast<double>(n) * n / std::max(z - inner, 1);
    shells.push_back({occ, width});
    inner += occ;
    remaining -= occ;
  }

  // Radial grid: fine near every shell width, extending to 8 sigma of the
  // widest shell.
  std::set<double> grid_pts{0.0};
  for (const auto& s : shells)
    for (int i = 1; i <= 160; ++i)
      grid_pts.insert(8.0 * s.width * i / 160.0);

  RadialProfile p;
  p.z = z;
  p.radius.assign(grid_pts.begin(), grid_pts.end());
  const std::size_t npts = p.radius.size();
  p.rho_total.assign(npts, 0.0);
  p.rho_core.assign(npts, 0.0);
  p.rho_val.assign(npts, 0.0);

  const int n_core = core_electron_count(z);
  int filled = 0;
  for (const auto& s : shells) {
    const double norm =
        s.occupancy / std::pow(2.0 * std::numbers::pi * s.width * s.width, 1.5);
    const bool is_core = filled < n_core;
    for (std::size_t i = 0; i < npts; ++i) {
      const double r = p.radius[i];
      const double v = norm * std::exp(-r * r / (2.0 * s.width * s.width));
      p.rho_total[i] += v;
      (is_core ? p.rho_core[i] : p.rho_val[i]) += v;
    }
    filled += s.occupancy;
  }
  p.validate();
  return p;
}

const RadialProfile& ProfileTable::get(int z) const {
  const auto it = by_z.find(z);
  if (it == by_z.end())
    throw std::runtime_error("no radial profile for element z=" +
                             std::to_string(z));
  return it->second;
}

bool ProfileTable::has(int z) const { return by_z.count(z) != 0; }

double ProfileTable::max_support(const std::vector<int>& elements) const {
  double s = 0.0;
  for (const int z : elements) s = std::max(s, get(z).radius.back());
  return s;
}

ProfileTable load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty profile file: " + path.string());
  {
    auto header = io::split_csv_line(line);
    const std::vector<std::string> expect = {"z", "radius", "rho_total",
                                             "rho_core", "rho_val"};
    if (std::vector<std::string>(header.begin(), header.end()) != expect)
      throw std::runtime_error("bad profile header in " + path.string());
  }
  ProfileTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 5)
      throw std::runtime_error("bad profile row at " + path.string() + ":" +
                               std::to_string(line_no));
    const int z = std::stoi(f[0]);
    auto& p = table.by_z[z];
    p.z = z;
    p.radius.push_back(std::stod(f[1]));
    p.rho_total.push_back(std::stod(f[2]));
    p.rho_core.push_back(std::stod(f[3]));
    p.rho_val.push_back(std::stod(f[4]));
  }
  for (const auto& [z, p] : table.by_z) p.validate();
  return table;
}

double default_spacing(double max_diameter, double max_support, int J) {
  return 2.0 * (max_diameter + 2.0 * max_support) /
         static_cast<double>(1 << J);
}

const Grid& DensityGrid::channel(Channel c) const {
  for (std::size_t i = 0; i < channels.size(); ++i)
    if (channels[i] == c) return values[i];
  throw std::logic_error("channel not present: " + channel_name(c));
}

double DensityGrid::mass(std::size_t channel_index) const {
  const auto& g = values.at(channel_index);
  return h * h *
         pairwise_sum(g.data(), static_cast<std::size_t>(g.size()));
}

namespace {

int wrap_index(long i, int n) {
  long r = i % n;
  if (r < 0) r += n;
  return static_cast<int>(r);
}

void splat_dirac(Grid& g, const Molecule& m, const std::vector<int>& order,
                 const Eigen::Vector2d& origin, double h, int n) {
  for (const int idx : order) {
    const auto& a = m.atoms[idx];
    // Cell-center coordinates of the atom.
    const double gx = (a.position.x() - origin.x()) / h - 0.5;
    const double gy = (a.position.y() - origin.y()) / h - 0.5;
    const long ix0 = static_cast<long>(std::floor(gx));
    const long iy0 = static_cast<long>(std::floor(gy));
    const double fx = gx - static_cast<double>(ix0);
    const double fy = gy - static_cast<double>(iy0);
    const double zmass = static_cast<double>(a.charge) / (h * h);
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        g(wrap_index(iy0 + dy, n), wrap_index(ix0 + dx, n)) +=
            zmass * wy[dy] * wx[dx];
  }
}

void splat_radial(Grid& g, const Molecule& m, const std::vector<int>& order,
                  const std::map<int, RadialProfile2D>& profiles_2d,
                  const std::vector<double> RadialProfile2D::*column,
                  const Eigen::Vector2d& origin, double h, int n) {
  for (const int idx : order) {
    const auto& a = m.atoms[idx];
    const auto& p = profiles_2d.at(a.charge);
    const double support = p.support();
    const long window = static_cast<long>(std::ceil(support / h)) + 1;
    const double gx = (a.position.x() - origin.x()) / h - 0.5;
    const double gy = (a.position.y() - origin.y()) / h - 0.5;
    const long cx = static_cast<long>(std::llround(gx));
    const long cy = static_cast<long>(std::llround(gy));
    for (long iy = cy - window; iy <= cy + window; ++iy) {
      const double dy = origin.y() + (static_cast<double>(iy) + 0.5) * h -
                        a.position.y();
      for (long ix = cx - window; ix <= cx + window; ++ix) {
        const double dx = origin.x() + (static_cast<double>(ix) + 0.5) * h -
                          a.position.x();
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r >= support) continue;
        g(wrap_index(iy, n), wrap_index(ix, n)) += p.eval(p.*column, r);
      }
    }
  }
}

}  // namespace

DensityGrid rasterize(const Molecule& m, const ChannelSpec& spec,
                      const ProfileTable& profiles,
                      const RasterParams& params) {
  validate_molecule(m);
  const int n = 1 << params.J;
  if (params.h <= 0.0) throw std::invalid_argument("raster spacing h <= 0");
  const double box = n * params.h;

  bool needs_profiles = false;
  for (const auto c : spec.channels)
    if (c != Channel::dirac) needs_profiles = true;

  std::map<int, RadialProfile2D> profiles_2d;
  double support = 0.0;
  if (needs_profiles) {
    for (const auto& a : m.atoms) {
      if (profiles_2d.count(a.charge)) continue;
      if (profiles.has(a.charge)) {
        profiles_2d[a.charge] = restrict_to_2d(profiles.get(a.charge));
      } else if (profiles.allow_analytic) {
        profiles_2d[a.charge] = restrict_to_2d(analytic_profile(a.charge));
      } else {
        throw std::runtime_error("no radial profile for element z=" +
                                 std::to_string(a.charge));
      }
      support = std::max(support, profiles_2d[a.charge].support());
    }
  }

  DensityGrid out;
  out.J = params.J;
  out.h = params.h;
  if (params.origin_override) {
    out.origin = *params.origin_override;
  } else {
    out.origin = m.centroid() - Eigen::Vector2d::Constant(0.5 * box);
  }
  out.channels = spec.channels;

  // Periodic-wrap guard: content must keep a quarter-box margin per side.
  const double slack = 1e-9 * box;
  for (int axis = 0; axis < 2; ++axis) {
    double lo = m.atoms[0].position[axis], hi = lo;
    for (const auto& a : m.atoms) {
      lo = std::min(lo, a.position[axis]);
      hi = std::max(hi, a.position[axis]);
    }
    lo -= support;
    hi += support;
    if (lo - out.origin[axis] < 0.25 * box - slack ||
        (out.origin[axis] + box) - hi < 0.25 * box - slack)
      throw std::runtime_error(
          "molecule content does not fit the quarter-box margin; increase h "
          "or J");
  }

  const auto order = canonical_atom_order(m);
  for (const auto c : spec.channels) {
    Grid g = Grid::Zero(n, n);
    switch (c) {
      case Channel::dirac:
        splat_dirac(g, m, order, out.origin, params.h, n);
        break;
      case Channel::atomic:
        splat_radial(g, m, order, profiles_2d, &RadialProfile2D::rho_total,
                     out.origin, params.h, n);
        break;
      case Channel::core:
        splat_radial(g, m, order, profiles_2d, &RadialProfile2D::rho_core,
                     out.origin, params.h, n);
        break;
      case Channel::valence:
        splat_radial(g, m, order, profiles_2d, &RadialProfile2D::rho_val,
                     out.origin, params.h, n);
        break;
    }
    out.values.push_back(std::move(g));
  }
  return out;
}

void save_grid(const DensityGrid& g, const std::filesystem::path& base_path) {
  io::json meta;
  meta["J"] = g.J;
  meta["h"] = g.h;
  meta["origin"] = {g.origin.x(), g.origin.y()};
  meta["channels"] = io::json::array();
  for (const auto c : g.channels) meta["channels"].push_back(channel_name(c));
  io::write_json(base_path.string() + ".json", meta);

  std::vector<double> blob;
  const std::size_t cells = static_cast<std::size_t>(g.n()) * g.n();
  blob.reserve(g.values.size() * cells);
  for (const auto& v : g.values) blob.insert(blob.end(), v.data(), v.data() + cells);
  io::write_f64(base_path.string() + ".f64", blob.data(), blob.size());
}

DensityGrid load_grid(const std::filesystem::path& base_path) {
  const auto meta = io::read_json(base_path.string() + ".json");
  DensityGrid g;
  g.J = meta.at("J").get<int>();
  g.h = meta.at("h").get<double>();
  g.origin.x() = meta.at("origin").at(0).get<double>();
  g.origin.y() = meta.at("origin").at(1).get<double>();
  for (const auto& name : meta.at("channels"))
    g.channels.push_back(channel_from_name(name.get<std::string>()));

  const auto blob = io::read_f64(base_path.string() + ".f64");
  const std::size_t cells = static_cast<std::size_t>(g.n()) * g.n();
  if (blob.size() != g.channels.size() * cells)
    throw std::runtime_error("grid blob size mismatch: " + base_path.string());
  for (std::size_t c = 0; c < g.channels.size(); ++c) {
    Grid v(g.n(), g.n());
    std::copy_n(blob.data() + c * cells, cells, v.data());
    g.values.push_back(std::move(v));
  }
  return g;
}

}  // namespace qmscat::density
