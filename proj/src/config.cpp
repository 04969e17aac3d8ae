#include "qmscat/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmscat {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

io::json parse_toml_value(const std::string& raw) {
  const std::string v = trim(raw);
  if (v.empty()) throw std::runtime_error("empty TOML value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw std::runtime_error("unterminated string: " + v);
    return v.substr(1, v.size() - 2);
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw std::runtime_error("unterminated array: " + v);
    io::json arr = io::json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    std::stringstream ss(inner);
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) arr.push_back(parse_toml_value(item));
    }
    return arr;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    std::size_t used = 0;
    if (v.find('.') == std::string::npos &&
        v.find('e') == std::string::npos &&
        v.find('E') == std::string::npos) {
      const long long i = std::stoll(v, &used);
      if (used == v.size()) return i;
    }
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw std::runtime_error("cannot parse TOML value: " + v);
}

/// Strip a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

template <typename T>
void maybe(const io::json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

}  // namespace

io::json parse_toml_subset(const std::string& text) {
  io::json root = io::json::object();
  io::json* section = &root;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("bad section header at line " +
                                 std::to_string(line_no));
      const std::string name = trim(line.substr(1, line.size() - 2));
      root[name] = io::json::object();
      section = &root[name];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("expected key = value at line " +
                               std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    (*section)[key] = parse_toml_value(line.substr(eq + 1));
  }
  return root;
}

RunConfig RunConfig::from_json(const io::json& j) {
  RunConfig c;
  if (j.contains("dataset")) {
    const auto& s = j["dataset"];
    maybe(s, "path", c.dataset_path);
    maybe(s, "format", c.dataset_format);
    maybe(s, "fold_seed", c.fold_seed);
    maybe(s, "stratify", c.stratify);
  }
  if (j.contains("density")) {
    const auto& s = j["density"];
    maybe(s, "channels", c.channels);
    maybe(s, "profiles", c.profiles_path);
    maybe(s, "allow_analytic_profiles", c.allow_analytic_profiles);
    maybe(s, "grid_J", c.grid_J);
    maybe(s, "spacing", c.spacing);
  }
  if (j.contains("filterbank")) {
    const auto& s = j["filterbank"];
    maybe(s, "angles_L", c.angles_L);
    maybe(s, "xi0", c.xi0);
    maybe(s, "sigma", c.sigma);
    maybe(s, "slant", c.slant);
  }
  if (j.contains("regress")) {
    const auto& s = j["regress"];
    maybe(s, "dict", c.dict);
    maybe(s, "m_max", c.m_max);
    maybe(s, "beta", c.beta);
    maybe(s, "bags", c.bags);
    maybe(s, "criterion", c.criterion);
    maybe(s, "seed", c.seed);
  }
  if (j.contains("krr")) {
    const auto& s = j["krr"];
    maybe(s, "replicas", c.krr_replicas);
    maybe(s, "noise_scale", c.krr_noise);
    maybe(s, "sigma_grid", c.krr_sigma_grid);
    maybe(s, "lambda_grid", c.krr_lambda_grid);
  }
  if (j.contains("analyze")) {
    const auto& s = j["analyze"];
    maybe(s, "draws", c.draws);
    maybe(s, "m_per_draw", c.m_per_draw);
    maybe(s, "train_fraction", c.train_fraction);
    maybe(s, "group_by", c.group_by);
  }
  if (j.contains("theory")) {
    const auto& s = j["theory"];
    maybe(s, "eps_grid", c.eps_grid);
    maybe(s, "seed", c.theory_seed);
  }
  if (j.contains("io")) {
    const auto& s = j["io"];
    maybe(s, "cache_dir", c.cache_dir);
    maybe(s, "out_dir", c.out_dir);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json")
    return from_json(io::json::parse(text));
  return from_json(parse_toml_subset(text));
}

io::json RunConfig::to_json() const {
  io::json j;
  j["dataset"] = {{"path", dataset_path},
                  {"format", dataset_format},
                  {"fold_seed", fold_seed},
                  {"stratify", stratify}};
  j["density"] = {{"channels", channels},
                  {"profiles", profiles_path},
                  {"allow_analytic_profiles", allow_analytic_profiles},
                  {"grid_J", grid_J},
                  {"spacing", spacing}};
  j["filterbank"] = {{"angles_L", angles_L},
                     {"xi0", xi0},
                     {"sigma", sigma},
                     {"slant", slant}};
  j["regress"] = {{"dict", dict},       {"m_max", m_max},
                  {"beta", beta},       {"bags", bags},
                  {"criterion", criterion}, {"seed", seed}};
  j["krr"] = {{"replicas", krr_replicas},
              {"noise_scale", krr_noise},
              {"sigma_grid", krr_sigma_grid},
              {"lambda_grid", krr_lambda_grid}};
  j["analyze"] = {{"draws", draws},
                  {"m_per_draw", m_per_draw},
                  {"train_fraction", train_fraction},
                  {"group_by", group_by}};
  j["theory"] = {{"eps_grid", eps_grid}, {"seed", theory_seed}};
  j["io"] = {{"cache_dir", cache_dir}, {"out_dir", out_dir}};
  return j;
}

std::string RunConfig::canonical_string() const { return to_json().dump(); }

std::uint64_t RunConfig::config_hash() const {
  return io::fnv1a(canonical_string());
}

std::uint64_t RunConfig::feature_cache_hash() const {
  io::json j;
  j["dataset"] = {dataset_path, dataset_format, fold_seed, stratify};
  j["density"] = {channels, profiles_path, allow_analytic_profiles, grid_J,
                  spacing};
  j["filterbank"] = {angles_L, xi0, sigma, slant};
  j["dict"] = dict;
  return io::fnv1a(j.dump());
}

}  // namespace qmscat
