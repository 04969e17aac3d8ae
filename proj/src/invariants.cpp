#include "qmscat/invariants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmscat/fft.hpp"
#include "qmscat/numeric.hpp"

namespace qmscat::invariants {

namespace {

constexpr double pi = std::numbers::pi;

void check_size(const RealGrid& rho, const wavelets::FilterBank& fb) {
  if (rho.rows() != fb.n() || rho.cols() != fb.n())
    throw std::invalid_argument("density grid size does not match filter bank");
}

}  // namespace

std::string dict_name(DictKind k) {
  switch (k) {
    case DictKind::fourier: return "fourier";
    case DictKind::wavelet: return "wavelet";
    case DictKind::scattering: return "scattering";
  }
  throw std::logic_error("bad dict kind");
}

DictKind dict_from_name(const std::string& name) {
  if (name == "fourier") return DictKind::fourier;
  if (name == "wavelet") return DictKind::wavelet;
  if (name == "scattering") return DictKind::scattering;
  throw std::invalid_argument("unknown dictionary '" + name + "'");
}

std::string FeatureDescriptor::label() const {
  std::string s = density::channel_name(channel);
  if (k >= 0) {
    s += "|F|k" + std::to_string(k);
    s += norm_p == 1 ? "|L1" : "|L2";
    return s;
  }
  s += "|o" + std::to_string(order);
  if (order >= 1) s += "|j" + std::to_string(j);
  if (order == 2) s += "|j'" + std::to_string(jp) + "|t" + std::to_string(t);
  if (order >= 1) s += norm_p == 1 ? "|L1" : "|L2";
  return s;
}

io::json DescriptorTable::to_json() const {
  io::json arr = io::json::array();
  for (const auto& d : items) {
    io::json jd;
    jd["order"] = d.order;
    jd["channel"] = density::channel_name(d.channel);
    jd["p"] = d.norm_p;
    if (d.j >= 0) jd["j"] = d.j;
    if (d.jp >= 0) jd["jp"] = d.jp;
    if (d.t >= 0) jd["t"] = d.t;
    if (d.k >= 0) jd["k"] = d.k;
    arr.push_back(std::move(jd));
  }
  return arr;
}

DescriptorTable DescriptorTable::from_json(const io::json& j) {
  DescriptorTable table;
  for (const auto& jd : j) {
    FeatureDescriptor d;
    d.order = jd.at("order").get<int>();
    d.channel = density::channel_from_name(jd.at("channel").get<std::string>());
    d.norm_p = jd.at("p").get<int>();
    if (jd.contains("j")) d.j = jd["j"].get<int>();
    if (jd.contains("jp")) d.jp = jd["jp"].get<int>();
    if (jd.contains("t")) d.t = jd["t"].get<int>();
    if (jd.contains("k")) d.k = jd["k"].get<int>();
    table.items.push_back(d);
  }
  return table;
}

std::vector<std::vector<RealGrid>> wavelet_modulus(
    const RealGrid& rho, const wavelets::FilterBank& fb) {
  check_size(rho, fb);
  const int n = fb.n();
  Fft2d fft(n);
  const ComplexGrid rho_hat = fft.forward(rho);
  ComplexGrid prod(n, n), conv(n, n);
  std::vector<std::vector<RealGrid>> u(fb.params.J);
  for (int j = 0; j < fb.params.J; ++j) {
    for (int l = 0; l < fb.params.L; ++l) {
      prod = rho_hat * fb.psi_hat[j][l].cast<std::complex<double>>();
      fft.inverse(prod, conv);
      u[j].push_back(conv.abs());
    }
  }
  return u;
}

std::vector<double> wavelet_dictionary(const RealGrid& rho,
                                       const wavelets::FilterBank& fb,
                                       double h) {
  check_size(rho, fb);
  const int n = fb.n();
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const double cell = h * h;
  const double ang = pi / fb.params.L;

  std::vector<double> values;
  values.reserve(2 * fb.params.J + 1);
  values.push_back(cell * pairwise_sum_map(rho.data(), cells,
                                           [](double v) { return std::abs(v); }));

  Fft2d fft(n);
  const ComplexGrid rho_hat = fft.forward(rho);
  ComplexGrid prod(n, n), conv(n, n);
  RealGrid mod(n, n);
  for (int j = 0; j < fb.params.J; ++j) {
    double l1 = 0.0, l2 = 0.0;
    for (int l = 0; l < fb.params.L; ++l) {
      prod = rho_hat * fb.psi_hat[j][l].cast<std::complex<double>>();
      fft.inverse(prod, conv);
      mod = conv.abs();
      l1 += pairwise_sum(mod.data(), cells);
      l2 += pairwise_sum_map(mod.data(), cells,
                             [](double v) { return v * v; });
    }
    values.push_back(ang * cell * l1);
    values.push_back(ang * cell * l2);
  }
  return values;
}

std::vector<double> scattering_dictionary(const RealGrid& rho,
                                          const wavelets::FilterBank& fb,
                                          double h) {
  check_size(rho, fb);
  const int n = fb.n();
  const int J = fb.params.J, L = fb.params.L;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const double weight = (pi / L) * h * h;

  // Norm sums of ||rho * psi_{j,l}| * psi_{jp,m}| indexed [j][l][jp][m].
  const auto idx = [&](int j, int l, int jp, int m) {
    return ((static_cast<std::size_t>(j) * L + l) * J + jp) * L + m;
  };
  std::vector<double> s1(static_cast<std::size_t>(J) * L * J * L, 0.0);
  std::vector<double> s2(s1.size(), 0.0);

  Fft2d fft(n);
  const ComplexGrid rho_hat = fft.forward(rho);
  ComplexGrid prod(n, n), conv(n, n);
  RealGrid mod(n, n);
  for (int j = 0; j < J - 1; ++j) {
    for (int l = 0; l < L; ++l) {
      prod = rho_hat * fb.psi_hat[j][l].cast<std::complex<double>>();
      fft.inverse(prod, conv);
      mod = conv.abs();
      const ComplexGrid u_hat = fft.forward(mod);
      for (int jp = j + 1; jp < J; ++jp) {
        for (int m = 0; m < L; ++m) {
          prod = u_hat * fb.psi_hat[jp][m].cast<std::complex<double>>();
          fft.inverse(prod, conv);
          mod = conv.abs();
          s1[idx(j, l, jp, m)] = pairwise_sum(mod.data(), cells);
          s2[idx(j, l, jp, m)] =
              pairwise_sum_map(mod.data(), cells,
                               [](double v) { return v * v; });
        }
      }
    }
  }

  // Reflection-invariant assembly: average the +-t angle offsets.
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(L / 2 + 1) * J * (J - 1));
  for (int j = 0; j < J; ++j) {
    for (int jp = j + 1; jp < J; ++jp) {
      for (int t = 0; t <= L / 2; ++t) {
        double v1 = 0.0, v2 = 0.0;
        for (const int sign : {+1, -1}) {
          const int off = sign * t;
          double a1 = 0.0, a2 = 0.0;
          for (int l = 0; l < L; ++l) {
            const int m = ((l + off) % L + L) % L;
            a1 += s1[idx(j, l, jp, m)];
            a2 += s2[idx(j, l, jp, m)];
          }
          v1 += 0.5 * weight * a1;
          v2 += 0.5 * weight * a2;
        }
        values.push_back(v1);
        values.push_back(v2);
      }
    }
  }
  return values;
}

std::vector<double> fourier_dictionary(const RealGrid& rho, int J, double h) {
  const int n = 1 << J;
  if (rho.rows() != n || rho.cols() != n)
    throw std::invalid_argument("density grid size does not match J");
  Fft2d fft(n);
  const ComplexGrid rho_hat = fft.forward(rho);

  const int n_bins = n / 2;  // 2^{J-1} annuli up to the Nyquist radius
  std::vector<double> sum1(n_bins + 1, 0.0), sum2(n_bins + 1, 0.0);
  std::vector<long> count(n_bins + 1, 0);
  const double cell = h * h;
  for (int ky = 0; ky < n; ++ky) {
    const double fy = signed_freq(ky, n);
    for (int kx = 0; kx < n; ++kx) {
      const double fx = signed_freq(kx, n);
      const int bin =
          static_cast<int>(std::lround(std::sqrt(fx * fx + fy * fy)));
      if (bin < 1 || bin > n_bins) continue;
      const double m = cell * std::abs(rho_hat(ky, kx));
      sum1[bin] += m;
      sum2[bin] += m * m;
      ++count[bin];
    }
  }
  std::vector<double> values;
  values.reserve(2 * n_bins);
  for (int k = 1; k <= n_bins; ++k) {
    const double c = count[k] > 0 ? static_cast<double>(count[k]) : 1.0;
    values.push_back(sum1[k] / c);
    values.push_back(sum2[k] / c);
  }
  return values;
}

DescriptorTable descriptor_table(DictKind kind,
                                 const density::ChannelSpec& spec, int J,
                                 int L) {
  DescriptorTable table;
  for (const auto c : spec.channels) {
    if (kind == DictKind::fourier) {
      for (int k = 1; k <= (1 << (J - 1)); ++k)
        for (const int p : {1, 2})
          table.items.push_back(
              {.order = 0, .channel = c, .norm_p = p, .k = k});
      continue;
    }
    table.items.push_back({.order = 0, .channel = c, .norm_p = 1});
    for (int j = 0; j < J; ++j)
      for (const int p : {1, 2})
        table.items.push_back(
            {.order = 1, .channel = c, .norm_p = p, .j = j});
    if (kind == DictKind::scattering) {
      for (int j = 0; j < J; ++j)
        for (int jp = j + 1; jp < J; ++jp)
          for (int t = 0; t <= L / 2; ++t)
            for (const int p : {1, 2})
              table.items.push_back({.order = 2,
                                     .channel = c,
                                     .norm_p = p,
                                     .j = j,
                                     .jp = jp,
                                     .t = t});
    }
  }
  return table;
}

FeatureVector featurize(const Molecule& m, const FeaturizeContext& ctx) {
  if (!ctx.profiles) throw std::logic_error("featurize: no profile table");
  if (ctx.kind != DictKind::fourier && !ctx.bank)
    throw std::logic_error("featurize: no filter bank");
  if (ctx.raster.h <= 0.0)
    throw std::invalid_argument("featurize: raster spacing not set");

  const density::DensityGrid grid =
      density::rasterize(m, ctx.spec, *ctx.profiles, ctx.raster);

  FeatureVector out;
  out.molecule_id = m.id;
  for (std::size_t c = 0; c < grid.channels.size(); ++c) {
    const RealGrid& rho = grid.values[c];
    std::vector<double> vals;
    switch (ctx.kind) {
      case DictKind::fourier:
        vals = fourier_dictionary(rho, ctx.raster.J, ctx.raster.h);
        break;
      case DictKind::wavelet:
        vals = wavelet_dictionary(rho, *ctx.bank, ctx.raster.h);
        break;
      case DictKind::scattering: {
        vals = wavelet_dictionary(rho, *ctx.bank, ctx.raster.h);
        const auto second = scattering_dictionary(rho, *ctx.bank, ctx.raster.h);
        vals.insert(vals.end(), second.begin(), second.end());
        break;
      }
    }
    out.values.insert(out.values.end(), vals.begin(), vals.end());
  }
  return out;
}

FeatureMatrix featurize_dataset(const Dataset& ds,
                                const FeaturizeContext& ctx) {
  FeaturizeContext local = ctx;
  if (local.raster.h <= 0.0) {
    double max_diam = 0.0;
    std::vector<int> elements;
    for (const auto& m : ds.molecules) {
      max_diam = std::max(max_diam, m.diameter());
      for (const auto& a : m.atoms) elements.push_back(a.charge);
    }
    double support = 0.0;
    bool radial = false;
    for (const auto c : local.spec.channels)
      if (c != density::Channel::dirac) radial = true;
    if (radial) {
      for (const int z : elements) {
        const auto& p = local.profiles->has(z)
                            ? local.profiles->get(z)
                            : density::analytic_profile(z);
        support = std::max(support, p.radius.back());
      }
    }
    local.raster.h =
        density::default_spacing(max_diam, support, local.raster.J);
  }

  const int L = ctx.bank ? ctx.bank->params.L : 0;
  FeatureMatrix fm;
  fm.table = descriptor_table(local.kind, local.spec, local.raster.J, L);
  fm.values.resize(static_cast<Eigen::Index>(ds.size()),
                   static_cast<Eigen::Index>(fm.table.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const FeatureVector fv = featurize(ds.molecules[i], local);
    if (fv.values.size() != fm.table.size())
      throw std::logic_error("feature vector length mismatch");
    fm.ids.push_back(fv.molecule_id);
    for (std::size_t k = 0; k < fv.values.size(); ++k)
      fm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          fv.values[k];
  }
  return fm;
}

void save_features(const FeatureMatrix& fm, const io::json& meta,
                   const std::filesystem::path& base_path) {
  io::json j;
  j["meta"] = meta;
  j["ids"] = fm.ids;
  j["rows"] = fm.values.rows();
  j["cols"] = fm.values.cols();
  j["descriptors"] = fm.table.to_json();
  io::write_json(base_path.string() + ".json", j);

  // Row-major blob.
  std::vector<double> blob;
  blob.reserve(static_cast<std::size_t>(fm.values.size()));
  for (Eigen::Index r = 0; r < fm.values.rows(); ++r)
    for (Eigen::Index c = 0; c < fm.values.cols(); ++c)
      blob.push_back(fm.values(r, c));
  io::write_f64(base_path.string() + ".f64", blob.data(), blob.size());
}

FeatureMatrix load_features(const std::filesystem::path& base_path,
                            io::json* meta_out) {
  const auto j = io::read_json(base_path.string() + ".json");
  if (meta_out) *meta_out = j.at("meta");
  FeatureMatrix fm;
  fm.table = DescriptorTable::from_json(j.at("descriptors"));
  fm.ids = j.at("ids").get<std::vector<std::string>>();
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto blob = io::read_f64(base_path.string() + ".f64");
  if (blob.size() != static_cast<std::size_t>(rows * cols))
    throw std::runtime_error("feature blob size mismatch: " +
                             base_path.string());
  fm.values.resize(rows, cols);
  std::size_t off = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) fm.values(r, c) = blob[off++];
  return fm;
}

}  // namespace qmscat::invariants
