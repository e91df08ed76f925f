#include "dsol/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dsol {

using json = nlohmann::json;

namespace {

const std::vector<std::pair<Mode, std::string>> kModes{
    {Mode::groundstate, "groundstate"}, {Mode::spectrum, "spectrum"},    {Mode::evolve, "evolve"},
    {Mode::shoot, "shoot"},             {Mode::norm_equiv, "norm-equiv"}, {Mode::verify, "verify"},
};

struct Sections {
  std::set<std::string> required, optional;
};

Sections sections_for(Mode m) {
  switch (m) {
    case Mode::groundstate: return {{"grid", "physics", "profile"}, {}};
    case Mode::spectrum: return {{"grid", "physics", "profile"}, {"spectrum"}};
    case Mode::evolve: return {{"grid", "physics", "profile", "evolution"}, {}};
    case Mode::shoot: return {{"grid", "physics", "profile", "evolution", "shooting"}, {}};
    case Mode::norm_equiv: return {{"grid", "frac"}, {}};
    case Mode::verify: return {{"grid", "physics", "profile"}, {"spectrum"}};
  }
  return {};
}

class Reader {
 public:
  std::vector<std::string> errors;

  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    error(path, "expected an object");
    return false;
  }

  void keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) error(path + "." + k, "unknown key");
  }

  std::optional<double> number(const json& j, const std::string& key, const std::string& path, bool required) {
    if (!j.contains(key)) {
      if (required) error(path + "." + key, "required");
      return std::nullopt;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
      error(path + "." + key, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      error(path + "." + key, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::uint64_t> count(const json& j, const std::string& key, const std::string& path, bool required) {
    if (!j.contains(key)) {
      if (required) error(path + "." + key, "required");
      return std::nullopt;
    }
    const json& v = j.at(key);
    if (!v.is_number_unsigned()) {
      error(path + "." + key, "expected a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_string()) {
      error(path + "." + key, "expected a string");
      return std::nullopt;
    }
    return j.at(key).get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) return std::nullopt;
    const json& v = j.at(key);
    if (!v.is_array() || v.empty()) {
      error(path + "." + key, "expected a nonempty array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        error(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        return std::nullopt;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }
};

template <class F>
void capture(Reader& rd, const std::string& path, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    rd.error(path, e.what());
  }
}

std::optional<GridSpec> read_grid(Reader& rd, const json& j) {
  if (!rd.object(j, "grid")) return std::nullopt;
  rd.keys(j, "grid", {"half_length", "n_points"});
  const auto R = rd.number(j, "half_length", "grid", true);
  const auto n = rd.count(j, "n_points", "grid", true);
  if (!R || !n) return std::nullopt;
  GridSpec g{*R, static_cast<std::size_t>(*n)};
  const std::size_t before = rd.errors.size();
  capture(rd, "grid", [&] { (void)g.grid(); });
  return rd.errors.size() == before ? std::optional<GridSpec>(g) : std::nullopt;
}

std::optional<PhysicsSpec> read_physics(Reader& rd, const json& j) {
  if (!rd.object(j, "physics")) return std::nullopt;
  rd.keys(j, "physics", {"p", "gamma"});
  const auto p = rd.number(j, "p", "physics", true);
  const auto gamma = rd.number(j, "gamma", "physics", true);
  if (!p || !gamma) return std::nullopt;
  if (!(*p > 1.0)) rd.error("physics.p", "must exceed 1");
  if (*gamma > 0.0) rd.error("physics.gamma", "must be <= 0 (repulsive delta)");
  if (!(*p > 1.0) || *gamma > 0.0) return std::nullopt;
  return PhysicsSpec{*p, *gamma};
}

std::optional<ProfileParams> read_profile(Reader& rd, const json& j, const std::optional<PhysicsSpec>& ph) {
  if (!rd.object(j, "profile")) return std::nullopt;
  rd.keys(j, "profile", {"solitons"});
  if (!j.contains("solitons") || !j.at("solitons").is_array() || j.at("solitons").empty()) {
    rd.error("profile.solitons", "expected a nonempty array");
    return std::nullopt;
  }
  const json& arr = j.at("solitons");
  ProfileParams pp;
  bool ok = true;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "profile.solitons[" + std::to_string(i) + "]";
    if (!rd.object(arr[i], path)) {
      ok = false;
      continue;
    }
    rd.keys(arr[i], path, {"omega", "v", "x0", "theta"});
    SolitonParams s;
    const auto omega = rd.number(arr[i], "omega", path, true);
    s.v = rd.number(arr[i], "v", path, false).value_or(0.0);
    s.x0 = rd.number(arr[i], "x0", path, false).value_or(0.0);
    s.theta = rd.number(arr[i], "theta", path, false).value_or(0.0);
    if (!omega || !ph) {
      ok = false;
      continue;
    }
    s.omega = *omega;
    s.p = ph->p;
    s.gamma = ph->gamma;
    const std::size_t before = rd.errors.size();
    capture(rd, path, [&] { s.validate(); });
    if (rd.errors.size() != before) ok = false;
    for (std::size_t k = 0; k < pp.solitons.size(); ++k)
      if (pp.solitons[k].v == s.v) {
        rd.error(path + ".v", "duplicates the velocity of profile.solitons[" + std::to_string(k) +
                                  "]; velocities must be pairwise distinct");
        ok = false;
      }
    pp.solitons.push_back(s);
  }
  if (!ok) return std::nullopt;
  std::sort(pp.solitons.begin(), pp.solitons.end(), [](const auto& a, const auto& b) { return a.v < b.v; });
  const std::size_t before = rd.errors.size();
  capture(rd, "profile", [&] { pp.validate(); });
  return rd.errors.size() == before ? std::optional<ProfileParams>(pp) : std::nullopt;
}

std::optional<EvolveSpec> read_evolution(Reader& rd, const json& j, Mode mode, const std::optional<GridSpec>& g,
                                         const std::optional<PhysicsSpec>& ph) {
  if (!rd.object(j, "evolution")) return std::nullopt;
  if (mode == Mode::evolve)
    rd.keys(j, "evolution", {"dt", "record_every", "t0", "t1", "initial_checkpoint"});
  else
    rd.keys(j, "evolution", {"dt"});
  EvolveSpec e;
  const auto dt = rd.number(j, "dt", "evolution", true);
  if (mode == Mode::evolve) {
    const auto every = rd.count(j, "record_every", "evolution", false);
    if (every) e.cfg.record_every = static_cast<int>(std::min<std::uint64_t>(*every, 1u << 30));
    e.t0 = rd.number(j, "t0", "evolution", false).value_or(0.0);
    const auto t1 = rd.number(j, "t1", "evolution", true);
    if (t1) e.t1 = *t1;
    e.initial_checkpoint = rd.string(j, "initial_checkpoint", "evolution");
    if (!t1) return std::nullopt;
  }
  if (!dt) return std::nullopt;
  e.cfg.dt = *dt;
  if (ph) {
    e.cfg.p = ph->p;
    e.cfg.gamma = ph->gamma;
  }
  const std::size_t before = rd.errors.size();
  if (g) capture(rd, "evolution", [&] { e.cfg.validate(g->grid()); });
  return rd.errors.size() == before ? std::optional<EvolveSpec>(e) : std::nullopt;
}

std::optional<ShootingConfig> read_shooting(Reader& rd, const json& j, const std::optional<ProfileParams>& pp) {
  if (!rd.object(j, "shooting")) return std::nullopt;
  rd.keys(j, "shooting",
          {"T0", "Tn", "newton_tol", "max_outer", "fd_step", "sample_dt", "continuation_step", "fit_margin", "eps0"});
  ShootingConfig c;
  const auto T0 = rd.number(j, "T0", "shooting", true);
  const auto Tn = rd.number(j, "Tn", "shooting", true);
  if (!T0 || !Tn) return std::nullopt;
  c.T0 = *T0;
  c.Tn = *Tn;
  c.newton_tol = rd.number(j, "newton_tol", "shooting", false).value_or(c.newton_tol);
  if (const auto m = rd.count(j, "max_outer", "shooting", false)) c.max_outer = static_cast<int>(std::min<std::uint64_t>(*m, 1000));
  c.fd_step = rd.number(j, "fd_step", "shooting", false).value_or(c.fd_step);
  c.sample_dt = rd.number(j, "sample_dt", "shooting", false).value_or(c.sample_dt);
  c.continuation_step = rd.number(j, "continuation_step", "shooting", false).value_or(c.continuation_step);
  c.fit_margin = rd.number(j, "fit_margin", "shooting", false).value_or(c.fit_margin);
  c.decompose.eps0 = rd.number(j, "eps0", "shooting", false).value_or(c.decompose.eps0);
  if (!(c.newton_tol > 0.0)) rd.error("shooting.newton_tol", "must be positive");
  if (!(c.fit_margin >= 0.0)) rd.error("shooting.fit_margin", "must be nonnegative");
  if (!(c.decompose.eps0 > 0.0)) rd.error("shooting.eps0", "must be positive");
  const std::size_t before = rd.errors.size();
  if (pp) capture(rd, "shooting", [&] { c.validate(*pp); });
  return rd.errors.size() == before ? std::optional<ShootingConfig>(c) : std::nullopt;
}

std::optional<SpectrumSpec> read_spectrum(Reader& rd, const json& j) {
  if (!rd.object(j, "spectrum")) return std::nullopt;
  rd.keys(j, "spectrum", {"coercivity_trials"});
  SpectrumSpec s;
  if (const auto n = rd.count(j, "coercivity_trials", "spectrum", false))
    s.coercivity_trials = static_cast<int>(std::min<std::uint64_t>(*n, 1u << 24));
  return s;
}

std::optional<NormEquivSpec> read_frac(Reader& rd, const json& j) {
  if (!rd.object(j, "frac")) return std::nullopt;
  rd.keys(j, "frac", {"s", "gamma", "quad_nodes"});
  NormEquivSpec f;
  if (auto s = rd.numbers(j, "s", "frac")) f.s = *s;
  if (auto g = rd.numbers(j, "gamma", "frac")) f.gamma = *g;
  if (const auto n = rd.count(j, "quad_nodes", "frac", false)) f.quad_nodes = static_cast<int>(std::min<std::uint64_t>(*n, 1u << 20));
  const std::size_t before = rd.errors.size();
  for (std::size_t i = 0; i < f.s.size(); ++i)
    if (!(f.s[i] > 0.0 && f.s[i] < 1.5)) rd.error("frac.s[" + std::to_string(i) + "]", "must lie in (0, 3/2)");
  for (std::size_t i = 0; i < f.gamma.size(); ++i)
    if (f.gamma[i] == 0.0) rd.error("frac.gamma[" + std::to_string(i) + "]", "must be nonzero");
  if (f.quad_nodes < 5) rd.error("frac.quad_nodes", "must be at least 5");
  return rd.errors.size() == before ? std::optional<NormEquivSpec>(f) : std::nullopt;
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::optional<Mode> parse_mode(std::string_view name) {
  for (const auto& [m, n] : kModes)
    if (n == name) return m;
  return std::nullopt;
}

std::string mode_name(Mode m) {
  for (const auto& [mm, n] : kModes)
    if (mm == m) return n;
  return "?";
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical); }

ExperimentConfig parse_config(std::string_view text, std::optional<Mode> mode_override,
                              std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError({"syntax error at " + locate(text, e.byte) + ": " + e.what()});
  }
  Reader rd;
  if (!rd.object(doc, "(document)")) throw ConfigError(rd.errors);

  ExperimentConfig cfg;
  std::optional<Mode> mode = mode_override;
  if (auto name = rd.string(doc, "mode", "(document)")) {
    const auto m = parse_mode(*name);
    if (!m)
      rd.error("mode", "unknown mode '" + *name + "'");
    else if (mode && *mode != *m)
      rd.error("mode", "document says '" + *name + "' but '" + mode_name(*mode) + "' was requested");
    else
      mode = m;
  }
  if (!mode) {
    if (!doc.contains("mode")) rd.error("mode", "required (in the document or on the command line)");
    throw ConfigError(rd.errors);
  }
  cfg.mode = *mode;

  const Sections sec = sections_for(cfg.mode);
  std::set<std::string> allowed{"mode", "seed", "output_dir"};
  allowed.insert(sec.required.begin(), sec.required.end());
  allowed.insert(sec.optional.begin(), sec.optional.end());
  for (const auto& [k, v] : doc.items()) {
    if (allowed.count(k)) continue;
    static const std::set<std::string> all{"grid", "physics", "profile", "evolution", "shooting", "spectrum", "frac"};
    rd.error(k, all.count(k) ? "section not used by mode " + mode_name(cfg.mode) : "unknown key");
  }
  for (const auto& s : sec.required)
    if (!doc.contains(s)) rd.error(s, "required by mode " + mode_name(cfg.mode));

  if (doc.contains("seed")) {
    if (auto s = rd.count(doc, "seed", "(document)", false)) cfg.seed = *s;
  }
  if (seed_override) cfg.seed = *seed_override;
  if (auto od = rd.string(doc, "output_dir", "(document)")) cfg.output_dir = *od;

  auto has = [&](const char* k) { return doc.contains(k) && allowed.count(k); };
  if (has("grid")) cfg.grid = read_grid(rd, doc["grid"]);
  if (has("physics")) cfg.physics = read_physics(rd, doc["physics"]);
  if (has("profile")) cfg.profile = read_profile(rd, doc["profile"], cfg.physics);
  if (has("evolution")) cfg.evolution = read_evolution(rd, doc["evolution"], cfg.mode, cfg.grid, cfg.physics);
  if (has("shooting")) cfg.shooting = read_shooting(rd, doc["shooting"], cfg.profile);
  if (has("spectrum")) cfg.spectrum = read_spectrum(rd, doc["spectrum"]);
  if (has("frac")) cfg.frac = read_frac(rd, doc["frac"]);
  if (cfg.shooting && cfg.evolution) cfg.shooting->evolution = cfg.evolution->cfg;
  if (!rd.errors.empty()) throw ConfigError(rd.errors);

  json canon = doc;
  canon.erase("output_dir");
  canon["mode"] = mode_name(cfg.mode);
  canon["seed"] = cfg.seed;
  cfg.canonical = canon.dump();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Mode> mode_override,
                             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), mode_override, seed_override);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

std::string format_real(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(columns.size()) {
  if (!out_) throw IoError("cannot write " + path.string());
  out_ << "# config_hash=" << hash_hex(config_hash) << '\n';
  row(columns);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> f;
  f.reserve(values.size());
  for (double v : values) f.push_back(format_real(v));
  row(f);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw IoError("csv row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << fields[i];
  out_ << '\n';
  if (!out_) throw IoError("csv write failed");
}

namespace {

void put(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw IoError("checkpoint: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_f64(std::ostream& out, double x) { put(out, std::bit_cast<std::uint64_t>(x), 8); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get(in, 8)); }

}  // namespace

void write_checkpoint(const std::filesystem::path& path, double t, const GridFunction& u, std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write("DSOL", 4);
  put(out, kCheckpointVersion, 4);
  put_f64(out, u.grid.half_length());
  put(out, u.grid.n_points(), 8);
  put_f64(out, t);
  put(out, config_hash, 8);
  for (Eigen::Index j = 0; j < u.values.size(); ++j) {
    put_f64(out, u.values[j].real());
    put_f64(out, u.values[j].imag());
  }
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "DSOL") throw IoError("checkpoint: bad magic in " + path.string());
  const auto version = static_cast<std::uint32_t>(get(in, 4));
  if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const double R = get_f64(in);
  const std::uint64_t n = get(in, 8);
  if (n > (1ull << 32)) throw IoError("checkpoint: implausible grid size");
  const double t = get_f64(in);
  const std::uint64_t hash = get(in, 8);
  Grid g(R, static_cast<std::size_t>(n));
  GridFunction u(g);
  for (Eigen::Index j = 0; j < u.values.size(); ++j) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    u.values[j] = cplx(re, im);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("checkpoint: trailing bytes in " + path.string());
  return Checkpoint{t, hash, std::move(u)};
}

}  // namespace dsol
