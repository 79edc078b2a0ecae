#include "vps/manifest.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vps {

PotentialSpec RunManifest::potential() const {
  PotentialSpec p;
  p.kind = potential_kind;
  p.n_p = n_p;
  p.n_s = n_s;
  p.chi = chi;
  p.delta = delta;
  return p;
}

MobilitySpec RunManifest::mobility() const {
  MobilitySpec m;
  m.kind = mobility_kind;
  m.exponent = mobility_exponent;
  m.delta = delta;
  return m;
}

CoefficientSet RunManifest::coefficients() const {
  CoefficientSet c;
  c.tau = tau;
  c.hel = hel;
  c.eta = eta;
  c.c0 = c0;
  c.eps1 = eps1;
  c.eps2 = eps2;
  c.coupling = coupling;
  return c;
}

EntropySpec RunManifest::entropy() const {
  EntropySpec e;
  e.mobility = mobility();
  e.mode = entropy_mode;
  return e;
}

void RunManifest::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("manifest: " + msg); };
  try {
    (void)grid();
    potential().validate();
    mobility().validate();
    coefficients().validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (!(dt > 0.0)) fail("time.dt must be positive");
  if (!(t_end > 0.0)) fail("time.t_end must be positive");
  if (!(ch_tol > 0.0) || !(spd_tol > 0.0) || !(projection_tol > 0.0))
    fail("solver tolerances must be positive");
  if (ch_max_iter < 1 || spd_max_iter < 1) fail("solver iteration caps must be >= 1");
  if (max_halvings < 0) fail("solver.max_halvings must be >= 0");
  if (!(initial_amplitude >= 0.0)) fail("initial.amplitude must be >= 0");
  if (initial_kind == InitialKind::file && initial_file.empty())
    fail("initial.kind = file requires initial.file");
  if (snapshot_every < 0) fail("output.snapshot_every must be >= 0");
  if (spectrum_every < 1) fail("output.spectrum_every must be >= 1");
  if (!(tol_mass > 0.0) || !(tol_energy > 0.0) || !(kappa > 0.0) ||
      !(entropy_ceiling > 0.0))
    fail("verify tolerances must be positive");
  if (sweep_deltas.empty()) fail("sweep.deltas must be non-empty");
  for (double d : sweep_deltas)
    if (!(d > 0.0 && d < 0.5)) fail("sweep.deltas entries must lie in (0, 1/2)");
  for (std::size_t i = 1; i < sweep_deltas.size(); ++i)
    if (!(sweep_deltas[i] < sweep_deltas[i - 1]))
      fail("sweep.deltas must be strictly decreasing");
  if (!(sweep_t_end > 0.0)) fail("sweep.t_end must be positive");
  if (mms_grids.size() < 2) fail("mms.grids needs at least two sizes");
  for (int n : mms_grids)
    if (n < 8) fail("mms.grids entries must be >= 8");
  if (!(mms_dt0 > 0.0) || !(mms_t_end > 0.0)) fail("mms timing must be positive");
  if (entropy_mode == EntropyMode::closed_form &&
      !entropy_closed_form_available(mobility()))
    fail("entropy.mode closed_form unavailable for this mobility; use quadrature");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct KeyParser {
  std::function<void(const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expect) {
  throw ConfigError("manifest: key '" + key + "': cannot parse '" + value +
                    "' (" + expect + ")");
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double x = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size()) bad_value(key, v, "number");
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size()) bad_value(key, v, "integer");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    bad_value(key, v, "unsigned integer");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true") return true;
  if (t == "false") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  return out;
}

template <typename Enum>
struct EnumTable {
  std::vector<std::pair<std::string, Enum>> entries;
  Enum parse(const std::string& key, const std::string& v) const {
    const std::string t = trim(v);
    for (const auto& [name, e] : entries)
      if (name == t) return e;
    std::string expect = "one of:";
    for (const auto& [name, e] : entries) expect += " " + name;
    bad_value(key, v, expect);
  }
  std::string name(Enum e) const {
    for (const auto& [n, v] : entries)
      if (v == e) return n;
    return "?";
  }
};

const EnumTable<Bc> kBc{{{"neumann", Bc::neumann}, {"periodic", Bc::periodic}}};
const EnumTable<Convection> kConvection{
    {{"upwind", Convection::upwind},
     {"semi_lagrangian", Convection::semi_lagrangian}}};
const EnumTable<PotentialKind> kPotential{
    {{"flory_huggins", PotentialKind::flory_huggins},
     {"ginzburg_landau", PotentialKind::ginzburg_landau}}};
const EnumTable<MobilityKind> kMobility{
    {{"regular", MobilityKind::regular},
     {"single_degenerate", MobilityKind::single_degenerate},
     {"double_degenerate", MobilityKind::double_degenerate}}};
const EnumTable<CouplingForm> kCoupling{
    {{"tanh_shifted", CouplingForm::tanh_shifted},
     {"tanh_verbatim", CouplingForm::tanh_verbatim},
     {"constant", CouplingForm::constant}}};
const EnumTable<CoefFamily> kFamily{
    {{"constant", CoefFamily::constant},
     {"inverse_quadratic", CoefFamily::inverse_quadratic},
     {"quadratic", CoefFamily::quadratic}}};
const EnumTable<EntropyMode> kEntropy{
    {{"closed_form", EntropyMode::closed_form},
     {"quadrature", EntropyMode::quadrature}}};
const EnumTable<InitialKind> kInitial{
    {{"uniform_noise", InitialKind::uniform_noise},
     {"constant", InitialKind::constant},
     {"file", InitialKind::file}}};
const EnumTable<ConformationInit> kConformation{
    {{"iso2d", ConformationInit::iso2d},
     {"iso3d", ConformationInit::iso3d},
     {"identity", ConformationInit::identity}}};

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Section/key table, also the canonical serialization order.
struct KeyDef {
  std::string full;  // section.key
  std::function<void(RunManifest&, const std::string&)> set;
  std::function<std::string(const RunManifest&)> get;
};

std::vector<KeyDef> key_table() {
  std::vector<KeyDef> t;
  auto add = [&](const std::string& full, auto set, auto get) {
    t.push_back({full, set, get});
  };
  auto dbl = [&](const std::string& full, double RunManifest::* f) {
    add(full,
        [f, full](RunManifest& m, const std::string& v) { m.*f = parse_double(full, v); },
        [f](const RunManifest& m) { return fmt_double(m.*f); });
  };
  auto itg = [&](const std::string& full, int RunManifest::* f) {
    add(full,
        [f, full](RunManifest& m, const std::string& v) {
          m.*f = static_cast<int>(parse_int(full, v));
        },
        [f](const RunManifest& m) { return std::to_string(m.*f); });
  };
  auto bol = [&](const std::string& full, bool RunManifest::* f) {
    add(full,
        [f, full](RunManifest& m, const std::string& v) { m.*f = parse_bool(full, v); },
        [f](const RunManifest& m) { return (m.*f) ? "true" : "false"; });
  };
  auto coef = [&](const std::string& sec, ScalarCoef RunManifest::* f) {
    add(sec + "_family",
        [f, sec](RunManifest& m, const std::string& v) {
          (m.*f).family = kFamily.parse(sec + "_family", v);
        },
        [f](const RunManifest& m) { return kFamily.name((m.*f).family); });
    auto part = [&](const char* suffix, double ScalarCoef::* g) {
      add(sec + suffix,
          [f, g, sec, suffix](RunManifest& m, const std::string& v) {
            (m.*f).*g = parse_double(sec + suffix, v);
          },
          [f, g](const RunManifest& m) { return fmt_double((m.*f).*g); });
    };
    part("_a", &ScalarCoef::a);
    part("_b", &ScalarCoef::b);
    part("_clamp_lo", &ScalarCoef::clamp_lo);
    part("_clamp_hi", &ScalarCoef::clamp_hi);
  };

  itg("grid.nx", &RunManifest::nx);
  itg("grid.ny", &RunManifest::ny);
  dbl("grid.lx", &RunManifest::lx);
  dbl("grid.ly", &RunManifest::ly);
  add("grid.bc",
      [](RunManifest& m, const std::string& v) { m.bc = kBc.parse("grid.bc", v); },
      [](const RunManifest& m) { return kBc.name(m.bc); });

  dbl("time.dt", &RunManifest::dt);
  dbl("time.t_end", &RunManifest::t_end);

  dbl("solver.ch_tol", &RunManifest::ch_tol);
  itg("solver.ch_max_iter", &RunManifest::ch_max_iter);
  dbl("solver.spd_tol", &RunManifest::spd_tol);
  itg("solver.spd_max_iter", &RunManifest::spd_max_iter);
  dbl("solver.projection_tol", &RunManifest::projection_tol);
  itg("solver.max_halvings", &RunManifest::max_halvings);
  add("solver.convection",
      [](RunManifest& m, const std::string& v) {
        m.convection = kConvection.parse("solver.convection", v);
      },
      [](const RunManifest& m) { return kConvection.name(m.convection); });
  bol("solver.mass_shift", &RunManifest::mass_shift);

  add("potential.kind",
      [](RunManifest& m, const std::string& v) {
        m.potential_kind = kPotential.parse("potential.kind", v);
      },
      [](const RunManifest& m) { return kPotential.name(m.potential_kind); });
  dbl("potential.n_p", &RunManifest::n_p);
  dbl("potential.n_s", &RunManifest::n_s);
  dbl("potential.chi", &RunManifest::chi);

  dbl("regularization.delta", &RunManifest::delta);

  add("mobility.kind",
      [](RunManifest& m, const std::string& v) {
        m.mobility_kind = kMobility.parse("mobility.kind", v);
      },
      [](const RunManifest& m) { return kMobility.name(m.mobility_kind); });
  dbl("mobility.exponent", &RunManifest::mobility_exponent);

  add("coupling.form",
      [](RunManifest& m, const std::string& v) {
        m.coupling.form = kCoupling.parse("coupling.form", v);
      },
      [](const RunManifest& m) { return kCoupling.name(m.coupling.form); });
  auto cpl = [&](const std::string& full, double CouplingSpec::* g) {
    add(full,
        [g, full](RunManifest& m, const std::string& v) {
          m.coupling.*g = parse_double(full, v);
        },
        [g](const RunManifest& m) { return fmt_double(m.coupling.*g); });
  };
  cpl("coupling.phi_star", &CouplingSpec::phi_star);
  cpl("coupling.slope", &CouplingSpec::slope);
  cpl("coupling.clamp_eps", &CouplingSpec::clamp_eps);
  cpl("coupling.value", &CouplingSpec::value);

  coef("coefficients.tau", &RunManifest::tau);
  coef("coefficients.h", &RunManifest::hel);
  coef("coefficients.eta", &RunManifest::eta);
  dbl("coefficients.c0", &RunManifest::c0);
  dbl("coefficients.eps1", &RunManifest::eps1);
  dbl("coefficients.eps2", &RunManifest::eps2);

  add("entropy.mode",
      [](RunManifest& m, const std::string& v) {
        m.entropy_mode = kEntropy.parse("entropy.mode", v);
      },
      [](const RunManifest& m) { return kEntropy.name(m.entropy_mode); });

  add("initial.kind",
      [](RunManifest& m, const std::string& v) {
        m.initial_kind = kInitial.parse("initial.kind", v);
      },
      [](const RunManifest& m) { return kInitial.name(m.initial_kind); });
  dbl("initial.mean", &RunManifest::initial_mean);
  dbl("initial.amplitude", &RunManifest::initial_amplitude);
  add("initial.seed",
      [](RunManifest& m, const std::string& v) { m.seed = parse_u64("initial.seed", v); },
      [](const RunManifest& m) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%" PRIu64, m.seed);
        return std::string(buf);
      });
  dbl("initial.q0", &RunManifest::q0);
  add("initial.conformation",
      [](RunManifest& m, const std::string& v) {
        m.conformation = kConformation.parse("initial.conformation", v);
      },
      [](const RunManifest& m) { return kConformation.name(m.conformation); });
  add("initial.file",
      [](RunManifest& m, const std::string& v) { m.initial_file = v; },
      [](const RunManifest& m) { return m.initial_file; });

  itg("output.snapshot_every", &RunManifest::snapshot_every);
  itg("output.spectrum_every", &RunManifest::spectrum_every);
  bol("output.vtk", &RunManifest::vtk);

  dbl("verify.tol_mass", &RunManifest::tol_mass);
  dbl("verify.tol_energy", &RunManifest::tol_energy);
  dbl("verify.kappa", &RunManifest::kappa);
  dbl("verify.entropy_ceiling", &RunManifest::entropy_ceiling);

  add("sweep.deltas",
      [](RunManifest& m, const std::string& v) {
        m.sweep_deltas.clear();
        for (const auto& s : split_list(v))
          m.sweep_deltas.push_back(parse_double("sweep.deltas", s));
      },
      [](const RunManifest& m) {
        std::string out;
        for (std::size_t i = 0; i < m.sweep_deltas.size(); ++i)
          out += (i ? ", " : "") + fmt_double(m.sweep_deltas[i]);
        return out;
      });
  dbl("sweep.t_end", &RunManifest::sweep_t_end);

  add("mms.grids",
      [](RunManifest& m, const std::string& v) {
        m.mms_grids.clear();
        for (const auto& s : split_list(v))
          m.mms_grids.push_back(static_cast<int>(parse_int("mms.grids", s)));
      },
      [](const RunManifest& m) {
        std::string out;
        for (std::size_t i = 0; i < m.mms_grids.size(); ++i)
          out += (i ? ", " : "") + std::to_string(m.mms_grids[i]);
        return out;
      });
  dbl("mms.dt0", &RunManifest::mms_dt0);
  dbl("mms.t_end", &RunManifest::mms_t_end);

  return t;
}

}  // namespace

RunManifest parse_manifest(const std::string& text) {
  const auto table = key_table();
  std::map<std::string, const KeyDef*> lookup;
  for (const auto& k : table) lookup[k.full] = &k;

  RunManifest m;
  std::set<std::string> seen;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("manifest line " + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty())
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": key outside any [section]");
    const std::string full = section + "." + key;
    auto it = lookup.find(full);
    if (it == lookup.end())
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": unknown key '" + full + "'");
    if (!seen.insert(full).second)
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": duplicate key '" + full + "'");
    it->second->set(m, value);
  }
  m.validate();
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open manifest: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest(ss.str());
}

std::string serialize_manifest(const RunManifest& m) {
  std::string out;
  std::string section;
  for (const auto& k : key_table()) {
    const auto dot = k.full.find('.');
    const std::string sec = k.full.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += k.full.substr(dot + 1) + " = " + k.get(m) + "\n";
  }
  return out;
}

void save_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write manifest: " + path);
  os << serialize_manifest(m);
  if (!os) throw ConfigError("manifest write failed: " + path);
}

}  // namespace vps
