#include "jblab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jblab/cantor.hpp"
#include "jblab/conditions.hpp"
#include "jblab/continued_fraction.hpp"
#include "jblab/dimension.hpp"
#include "jblab/errors.hpp"
#include "jblab/rates.hpp"
#include "jblab/system.hpp"
#include "jblab/target_rate.hpp"

namespace jblab {

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

std::string trim(std::string t) {
  t.erase(0, t.find_first_not_of(" \t\r"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  return t;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

// "2^k" or a decimal integer.
BigInt parse_bigint(const std::string& text) {
  auto caret = text.find('^');
  if (caret != std::string::npos) {
    if (trim(text.substr(0, caret)) != "2") throw Error(ErrorCode::ParseError, "only powers of 2 are accepted: " + text);
    long e = std::stol(text.substr(caret + 1));
    if (e < 0) throw Error(ErrorCode::ParseError, "negative exponent: " + text);
    return pow2_int(static_cast<unsigned long>(e));
  }
  BigInt v;
  if (v.set_str(text, 10) != 0) throw Error(ErrorCode::ParseError, "not an integer: " + text);
  return v;
}

// "golden:K", "sqrt2:K" or "[a0; a1, ...]".
ContinuedFraction parse_cf(const std::string& text) {
  auto colon = text.find(':');
  if (colon != std::string::npos && text.front() != '[') {
    std::string name = text.substr(0, colon);
    long K = std::stol(text.substr(colon + 1));
    if (K < 1) throw Error(ErrorCode::ParseError, "continued fraction depth must be >= 1: " + text);
    if (name == "golden") return ContinuedFraction::golden(static_cast<std::size_t>(K));
    if (name == "sqrt2") return ContinuedFraction::sqrt2_minus_1(static_cast<std::size_t>(K));
    throw Error(ErrorCode::ParseError, "unknown continued fraction '" + name + "'");
  }
  return ContinuedFraction::parse(text);
}

bool is_cf_spec(const std::string& text) {
  return !text.empty() && (text.front() == '[' || text.rfind("golden:", 0) == 0 || text.rfind("sqrt2:", 0) == 0);
}

// A CF prefix names the midpoint of its enclosure; anything else is an exact rational.
BigRat parse_scalar_point(const std::string& text) {
  if (!is_cf_spec(text)) return parse_rational(text);
  ContinuedFraction cf = parse_cf(text);
  if (cf.terminated()) return cf.value();
  RatInterval e = cf.enclosure();
  return (e.lo + e.hi) / 2;
}

Box parse_box(const std::string& text, int d) {
  auto parts = split(text, ',');
  if (parts.size() != 2) throw Error(ErrorCode::ParseError, "omega must be 'lo,hi': " + text);
  BigRat lo = parse_rational(parts[0]), hi = parse_rational(parts[1]);
  if (!(0 <= lo && lo < hi && hi <= 1)) throw Error(ErrorCode::ParseError, "omega must satisfy 0 <= lo < hi <= 1");
  Box box;
  for (int i = 0; i < d; ++i) {
    box.lo.push_back(lo);
    box.hi.push_back(hi);
  }
  return box;
}

std::string fixed(double v, int digits = 10) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::setprecision(digits) << v;
  return out.str();
}

// JSON numbers with a fixed number of significant digits, so output bytes do not depend on
// the last ulp of a computation.
json num(double v) {
  if (!std::isfinite(v)) return fixed(v);
  return std::stod(fixed(v));
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = {
      {"experiment", "enum:c1|c2|P|threedist|poisson-mc|rate|jb|localized|cover", "c1", "experiment to run"},
      {"seed", "u64", "1", "global seed; every random stream derives from it"},
      {"system", "enum:rational|dyadic|inhomogeneous|poisson", "rational", "approximation system"},
      {"dim", "int", "1", "dimension (dyadic system)"},
      {"q_max", "bigint", "3000", "rational system: largest denominator (integer or 2^k)"},
      {"j_max", "int", "14", "dyadic system: deepest generation"},
      {"n_max", "u64", "1000", "inhomogeneous system: number of pairs"},
      {"alpha", "cf", "golden:64", "inhomogeneous system and threedist: golden:K, sqrt2:K or [a0; a1, ...]"},
      {"r_min", "rational", "1/1024", "poisson system: smallest radius"},
      {"profile_q_max", "bigint", "3000", "rational system: truncation used to measure N_j"},
      {"profile_j_max", "int", "14", "deepest layer of the measured N_j profile"},
      {"window_slack", "int", "4", "open end slack of the property-P window"},
      {"cube", "cube", "0:0", "cube U as generation:index"},
      {"deltas", "doubles", "2", "delta values (jb uses the first)"},
      {"j_lo", "int", "8", "first generation of a sweep"},
      {"j_hi", "int", "12", "last generation of a sweep"},
      {"j_list", "longs", "8,12", "poisson-mc generations"},
      {"strip_j", "int", "4", "poisson-mc: generation of the strip-count cube"},
      {"trials", "u64", "10000", "Monte Carlo trials"},
      {"N", "u64", "500", "threedist: number of multiples"},
      {"point", "point", "golden:40", "rate: p/q, decimal, or a continued fraction prefix"},
      {"head_radius", "rational", "1/100", "rate: largest radius scanned"},
      {"s_offsets", "doubles", "-0.1,0.1", "cover: s = d/delta + offset"},
      {"cover_J", "int", "1", "cover: first term of the sum"},
      {"f", "rate", "affine:1,1", "target rate (localized)"},
      {"omega", "box", "1/5,4/5", "region Omega as lo,hi on every coordinate"},
      {"epsilons", "doubles", "0.2,0.1,0.05", "epsilon schedule"},
      {"kappa", "kappa", "auto", "density constant, or auto to measure it"},
      {"kappa_cube", "cube", "6:21", "cube used to measure kappa"},
      {"kappa_deltas", "doubles", "1.5,2,3", "deltas used to measure kappa"},
      {"kappa_j_lo", "int", "12", "first generation used to measure kappa"},
      {"kappa_j_hi", "int", "16", "last generation used to measure kappa"},
      {"mode", "enum:desk|threshold", "desk", "level search: desk (g + branch) or threshold (j >= 2 g and the size thresholds)"},
      {"branch_min", "int", "5", "desk mode: smallest j - g"},
      {"branch_max", "int", "9", "desk mode: largest j - g"},
      {"depth", "int", "3", "tree depth"},
      {"j_cap", "int", "4096", "threshold mode: largest level"},
      {"scan_budget", "u64", "1048576", "largest subcube scan per level"},
      {"seed_cap", "int", "4096", "largest generation tried for U_0"},
      {"min_generation", "int", "0", "lower bound on g(U_0)"},
      {"samples", "u64", "16", "tree points whose rates are measured"},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

void check_value(const ConfigKey& key, const std::string& value) {
  const std::string& t = key.type;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::ConfigError, "field '" + key.name + "': " + why + " (got '" + value + "')");
  };
  try {
    std::size_t used = 0;
    if (t.rfind("enum:", 0) == 0) {
      auto options = split(t.substr(5), '|');
      if (std::find(options.begin(), options.end(), value) == options.end()) throw fail("expected one of " + t.substr(5));
    } else if (t == "int") {
      std::stol(value, &used);
      if (used != value.size()) throw fail("expected an integer");
    } else if (t == "u64") {
      if (value.empty() || value.front() == '-') throw fail("expected a non-negative integer");
      std::stoull(value, &used);
      if (used != value.size()) throw fail("expected a non-negative integer");
    } else if (t == "double") {
      std::stod(value, &used);
      if (used != value.size()) throw fail("expected a number");
    } else if (t == "doubles" || t == "longs") {
      auto items = split(value, ',');
      if (items.empty()) throw fail("expected a comma separated list");
      for (const auto& item : items) {
        if (t == "doubles") std::stod(item, &used);
        else std::stol(item, &used);
        if (used != item.size()) throw fail("bad list item '" + item + "'");
      }
    } else if (t == "rational") {
      parse_rational(value);
    } else if (t == "bigint") {
      parse_bigint(value);
    } else if (t == "cf") {
      parse_cf(value);
    } else if (t == "point") {
      parse_scalar_point(value);
    } else if (t == "cube") {
      DyadicCube::parse(value);
    } else if (t == "rate") {
      TargetRate::parse(value);
    } else if (t == "box") {
      parse_box(value, 1);
    } else if (t == "kappa") {
      if (value != "auto") {
        double k = std::stod(value, &used);
        if (used != value.size() || !(k > 0 && k <= 1)) throw fail("expected auto or a number in (0, 1]");
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw fail(e.what());
  } catch (const std::exception&) {
    throw fail("expected type " + t);
  }
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& k : config_schema()) values_[k.name] = k.fallback;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    auto at = [&](const std::string& why) {
      return Error(ErrorCode::ConfigError, "line " + std::to_string(number) + ": " + why);
    };
    if (eq == std::string::npos) throw at("expected key = value");
    std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    const ConfigKey* spec = find_key(key);
    if (!spec) throw at("unknown key '" + key + "'");
    if (!seen.insert(key).second) throw at("duplicate key '" + key + "'");
    try {
      check_value(*spec, value);
    } catch (const Error& e) {
      throw at(e.what());
    }
    cfg.values_[key] = value;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const auto& k : config_schema()) out << k.name << " = " << values_.at(k.name) << '\n';
  return out.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a(to_text())); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const ConfigKey* spec = find_key(key);
  if (!spec) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  std::string v = trim(value);
  check_value(*spec, v);
  values_[key] = v;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  return it->second;
}

long ExperimentConfig::get_long(const std::string& key) const { return std::stol(get(key)); }
std::uint64_t ExperimentConfig::get_u64(const std::string& key) const { return std::stoull(get(key)); }
double ExperimentConfig::get_double(const std::string& key) const { return std::stod(get(key)); }

std::vector<double> ExperimentConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get(key), ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<long> ExperimentConfig::get_longs(const std::string& key) const {
  std::vector<long> out;
  for (const auto& item : split(get(key), ',')) out.push_back(std::stol(item));
  return out;
}

void ExperimentConfig::validate() const {
  for (const auto& k : config_schema()) check_value(k, get(k.name));
  auto field = [](const std::string& name, const std::string& why) {
    return Error(ErrorCode::ConfigError, "field '" + name + "': " + why);
  };
  if (get_long("dim") < 1) throw field("dim", "must be >= 1");
  if (get("system") != "dyadic" && get_long("dim") != 1) throw field("dim", "only the dyadic system has d > 1");
  if (get_long("j_lo") > get_long("j_hi")) throw field("j_lo", "must not exceed j_hi");
  if (get_long("kappa_j_lo") > get_long("kappa_j_hi")) throw field("kappa_j_lo", "must not exceed kappa_j_hi");
  if (get_long("branch_min") < 1 || get_long("branch_min") > get_long("branch_max"))
    throw field("branch_min", "need 1 <= branch_min <= branch_max");
  if (get_long("depth") < 1) throw field("depth", "must be >= 1");
  if (get_long("profile_j_max") < 1) throw field("profile_j_max", "must be >= 1");
  for (double e : get_doubles("epsilons"))
    if (!(e > 0)) throw field("epsilons", "must be positive");
  for (double d : get_doubles("deltas"))
    if (!(d >= 1)) throw field("deltas", "must be >= 1");
}

std::uint64_t derive_seed(std::uint64_t global, std::string_view stream) {
  std::uint64_t tag = fnv1a(stream);
  std::seed_seq seq{static_cast<std::uint32_t>(global), static_cast<std::uint32_t>(global >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

// ---------------------------------------------------------------------------
// Runner

namespace {

class Writer {
 public:
  explicit Writer(std::string dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& bytes) {
    std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
    out << bytes;
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + name);
    files_.push_back({name, hex64(fnv1a(bytes))});
  }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Outcome {
  int exit_code = kExitOk;
  std::string message;
  json result = json::object();
  json seeds = json::object();
};

System make_system(const ExperimentConfig& cfg) {
  const std::string kind = cfg.get("system");
  if (kind == "rational") return gen_rational(parse_bigint(cfg.get("q_max")));
  if (kind == "dyadic") return gen_dyadic(cfg.get_long("j_max"), static_cast<int>(cfg.get_long("dim")));
  if (kind == "inhomogeneous") return gen_inhomogeneous(parse_cf(cfg.get("alpha")), cfg.get_u64("n_max"));
  return gen_poisson(derive_seed(cfg.get_u64("seed"), "poisson-system"), parse_rational(cfg.get("r_min")));
}

// N_j measured on a small truncation of the same family.
RedundancyProfile measured_profile(const ExperimentConfig& cfg, const System& system) {
  const long layers = cfg.get_long("profile_j_max");
  const std::string kind = cfg.get("system");
  if (kind == "rational") return c1_profile(irreducible(gen_rational(parse_bigint(cfg.get("profile_q_max")))), layers);
  if (kind == "dyadic") return c1_profile(irreducible(gen_dyadic(layers, system.dim())), layers);
  return c1_profile(irreducible(system), layers);
}

ConditionContext make_context(const ExperimentConfig& cfg, const System& system, const RedundancyProfile& profile,
                              const GaugeFunction& phi) {
  return ConditionContext(system, profile, phi, cfg.get_long("window_slack"));
}

Outcome run_c1(const ExperimentConfig& cfg, Writer& out) {
  System system = make_system(cfg);
  const long layers = cfg.get_long("profile_j_max");
  RedundancyProfile profile = c1_profile(irreducible(system), layers);
  out.write("profile.csv", profile.to_csv(default_gauge()));
  Outcome o;
  std::uint64_t max_n = 0;
  for (long j = 0; j <= profile.max_generation(); ++j) max_n = std::max(max_n, profile.count(j));
  o.result["max_N"] = max_n;
  o.result["layers"] = layers;
  o.result["upper_bound"] = profile.upper_bound();
  o.result["log2N_over_j_at_last"] = num(std::log2(static_cast<double>(profile.count(layers))) / static_cast<double>(layers));
  o.message = "max N_j = " + std::to_string(max_n) + " for j <= " + std::to_string(layers);
  return o;
}

Outcome run_c2(const ExperimentConfig& cfg, Writer& out) {
  System system = make_system(cfg);
  RedundancyProfile profile = measured_profile(cfg, system);
  ConditionContext ctx = make_context(cfg, system, profile, default_gauge());
  DyadicCube U = DyadicCube::parse(cfg.get("cube"));
  std::string csv;
  Outcome o;
  o.result["cube"] = U.to_string();
  double overall = 1.0;
  for (std::size_t i = 0; i < cfg.get_doubles("deltas").size(); ++i) {
    double delta = cfg.get_doubles("deltas")[i];
    C2Report rep = c2_report(U, delta, cfg.get_long("j_lo"), cfg.get_long("j_hi"), ctx);
    csv += rep.to_csv(i == 0);
    json entry;
    entry["delta"] = num(delta);
    entry["min_kappa_hat"] = num(rep.min_kappa_hat());
    entry["truncation"] = rep.truncation_note;
    o.result["sweeps"].push_back(entry);
    overall = std::min(overall, rep.min_kappa_hat());
  }
  out.write("c2.csv", csv);
  o.result["min_kappa_hat"] = num(overall);
  o.message = "min kappa-hat = " + fixed(overall, 4);
  return o;
}

Outcome run_P(const ExperimentConfig& cfg, Writer& out) {
  System system = make_system(cfg);
  RedundancyProfile profile = measured_profile(cfg, system);
  ConditionContext ctx = make_context(cfg, system, profile, default_gauge());
  DyadicCube V = DyadicCube::parse(cfg.get("cube"));
  std::ostringstream csv;
  csv << "delta,holds,center,neg_log2_radius,index,window_lo,window_hi\n";
  Outcome o;
  std::size_t holds = 0;
  for (double delta : cfg.get_doubles("deltas")) {
    auto w = check_P(V, delta, ctx);
    auto window = p_window(V.generation(), delta, ctx);
    if (w) {
      ++holds;
      csv << fixed(delta) << ",1," << w->pair.center.to_string() << ',' << fixed(-log2_of(w->pair.radius)) << ','
          << w->pair.index.get_str() << ',' << w->window_lo << ',' << w->window_hi << '\n';
    } else {
      csv << fixed(delta) << ",0,,,," << window.first << ',' << window.second << '\n';
    }
    json entry;
    entry["delta"] = num(delta);
    entry["holds"] = w.has_value();
    if (w) entry["center"] = w->pair.center.to_string();
    o.result["checks"].push_back(entry);
  }
  out.write("p.csv", csv.str());
  o.message = "P holds for " + std::to_string(holds) + " of " + std::to_string(cfg.get_doubles("deltas").size()) + " deltas";
  return o;
}

Outcome run_threedist(const ExperimentConfig& cfg, Writer& out) {
  ThreeDistanceReport rep = three_distance(parse_cf(cfg.get("alpha")), cfg.get_u64("N"));
  std::ostringstream csv;
  csv << "position,gap\n";
  for (std::size_t i = 0; i < rep.gaps.size(); ++i) csv << i << ',' << fixed(rep.gaps[i].get_d(), 17) << '\n';
  out.write("gaps.csv", csv.str());
  Outcome o;
  o.result["distinct"] = rep.distinct();
  for (const auto& g : rep.gap_classes) o.result["classes"].push_back(num(g.get_d()));
  o.result["max_gap"] = num(rep.max_gap.get_d());
  o.result["bound"] = num(3.0 / (static_cast<double>(cfg.get_u64("N")) + 1.0));
  o.result["max_gap_ok"] = rep.max_gap_ok;
  o.message = std::to_string(rep.distinct()) + " distinct gaps";
  if (rep.distinct() > 3 || !rep.max_gap_ok) o.exit_code = kExitVerification;
  return o;
}

Outcome run_poisson(const ExperimentConfig& cfg, Writer& out) {
  Outcome o;
  const std::uint64_t seed = cfg.get_u64("seed");
  const std::uint64_t mc_seed = derive_seed(seed, "poisson-mc"), strip_seed = derive_seed(seed, "strip");
  o.seeds["poisson-mc"] = mc_seed;
  o.seeds["strip"] = strip_seed;
  const std::uint64_t trials = cfg.get_u64("trials");
  std::ostringstream csv;
  csv << "delta,j,estimate,ci_lo,ci_hi,naive,single_point,log_kappa1,gamma,h\n";
  for (double delta : cfg.get_doubles("deltas")) {
    for (long j : cfg.get_longs("j_list")) {
      PoissonMcReport r = poisson_c2_mc(delta, j, trials, mc_seed);
      csv << fixed(delta) << ',' << j << ',' << fixed(r.estimate) << ',' << fixed(r.ci_lo) << ',' << fixed(r.ci_hi)
          << ',' << fixed(r.naive_frequency) << ',' << fixed(r.single_point_frequency) << ',' << fixed(r.log_kappa1)
          << ',' << r.gamma << ',' << r.window_hi << '\n';
      json e;
      e["delta"] = num(delta);
      e["j"] = j;
      e["estimate"] = num(r.estimate);
      e["ci"] = {num(r.ci_lo), num(r.ci_hi)};
      e["single_point_frequency"] = num(r.single_point_frequency);
      e["log_kappa1"] = num(r.log_kappa1);
      o.result["mc"].push_back(e);
    }
  }
  out.write("poisson.csv", csv.str());
  PoissonStripStats st = poisson_strip_counts(cfg.get_long("strip_j"), trials, strip_seed);
  std::ostringstream hist;
  hist << "count,trials\n";
  for (std::size_t k = 0; k < st.histogram.size(); ++k) hist << k << ',' << st.histogram[k] << '\n';
  out.write("strip.csv", hist.str());
  o.result["strip"] = {{"j", st.j}, {"mean", num(st.mean)}, {"variance", num(st.variance)}};
  o.message = "strip mean " + fixed(st.mean, 4) + ", variance " + fixed(st.variance, 4);
  return o;
}

Outcome run_rate(const ExperimentConfig& cfg, Writer& out) {
  System system = make_system(cfg);
  const std::string spec = cfg.get("point");
  Point x = Point::scalar(parse_scalar_point(spec));
  RateEstimate est = delta_empirical(x, system, parse_rational(cfg.get("head_radius")));
  out.write("rate.csv", est.to_csv());
  Outcome o;
  o.result["x"] = num(x[0].get_d());
  o.result["estimate"] = num(est.estimate);
  o.result["infinite"] = est.infinite;
  o.result["unscanned_bound"] = num(est.unscanned_bound);
  o.message = "empirical rate " + fixed(est.estimate, 6);
  if (is_cf_spec(spec) && system.kind() == SystemKind::Rational) {
    // Convergents with q <= q_max are the ones the truncated system sees, plus the next one.
    ContinuedFraction cf = parse_cf(spec);
    const BigInt q_max = system.params().q_max;
    std::size_t k = 0;
    while (k + 1 <= cf.depth() && cf.q()[k + 1] <= q_max) ++k;
    RateEstimate exact = delta_from_cf(cf.truncated(std::min(cf.depth(), k + 1)));
    o.result["cf_estimate"] = num(exact.estimate);
    o.message += ", continued fraction " + fixed(exact.estimate, 6);
  }
  return o;
}

Outcome run_cover(const ExperimentConfig& cfg, Writer& out) {
  System system = make_system(cfg);
  RedundancyProfile profile = measured_profile(cfg, system);
  const double d = profile.dim();
  std::ostringstream csv;
  csv << "delta,s,J,j_max,verdict,last_log2_term,partial_sum\n";
  Outcome o;
  for (double delta : cfg.get_doubles("deltas")) {
    for (double off : cfg.get_doubles("s_offsets")) {
      double s = d / delta + off;
      CoveringSum cs = covering_sum(profile, delta, s, cfg.get_long("cover_J"), profile.max_generation());
      csv << fixed(delta) << ',' << fixed(s) << ',' << cs.J << ',' << cs.j_max << ',' << to_string(cs.verdict) << ','
          << fixed(cs.log2_terms.back()) << ',' << fixed(cs.partial_sums.back()) << '\n';
      json e;
      e["delta"] = num(delta);
      e["s"] = num(s);
      e["verdict"] = to_string(cs.verdict);
      o.result["sums"].push_back(e);
    }
  }
  out.write("cover.csv", csv.str());
  o.message = "covering sums written";
  return o;
}

// Truncation of the tree's family that stops above the leaf generation, so a leaf center is
// not itself a center of the scanned system.
std::optional<System> rate_system(const System& system, long leaf_generation) {
  if (system.kind() == SystemKind::Dyadic) return gen_dyadic(std::max(1L, leaf_generation - 6), system.dim());
  if (system.kind() == SystemKind::Rational)
    return gen_rational(pow2_int(static_cast<unsigned long>(std::max(1L, (leaf_generation - 1) / 2))));
  return std::nullopt;
}

Outcome run_tree(const ExperimentConfig& cfg, Writer& out, bool constant) {
  Outcome o;
  System system = make_system(cfg);
  const int d = system.dim();
  RedundancyProfile profile = measured_profile(cfg, system);
  const double jb_delta = cfg.get_doubles("deltas").front();
  const std::string f_spec = constant ? "const:" + fixed(jb_delta, 17) : cfg.get("f");
  Box omega = parse_box(cfg.get("omega"), d);
  TargetRate f = TargetRate::parse(f_spec);
  const double inf_f = f.bounds(omega).lo;
  o.result["f"] = f_spec;
  o.result["target"] = num(d / inf_f);

  double kappa = 0, kappa_measured = 0;
  if (cfg.get("kappa") == "auto") {
    ConditionContext probe = make_context(cfg, system, profile, default_gauge());
    std::vector<double> deltas = cfg.get_doubles("kappa_deltas");
    KappaCalibration kc = calibrate_kappa(DyadicCube::parse(cfg.get("kappa_cube")), deltas, cfg.get_long("kappa_j_lo"),
                                          cfg.get_long("kappa_j_hi"), probe);
    if (kc.kappa <= 0) throw Error(ErrorCode::LevelNotFound, "measured kappa is 0");
    kappa = kc.kappa;
    kappa_measured = kc.measured;
  } else {
    kappa = cfg.get_double("kappa");
    kappa_measured = kappa;
  }
  o.result["kappa"] = num(kappa);
  o.result["kappa_measured"] = num(kappa_measured);

  std::ostringstream cert_csv, sample_csv, exp_csv;
  cert_csv << "epsilon,g0,gauge_scale,depth,delta_eps,certificate,h_eps,min_local_exponent,required_exponent,"
              "scaling_violations,nodes,mass_ok,avoidance_violations,log2_global_constant,failure\n";
  sample_csv << "epsilon,sample,x,f_x,last_delta,estimate,difference\n";
  exp_csv << "epsilon,bin_lo,bin_hi,count\n";
  bool construction_failed = false, verification_failed = false;
  const auto eps_list = cfg.get_doubles("epsilons");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    const double eps = eps_list[k];
    json e;
    e["epsilon"] = num(eps);
    GaugeCalibration gauge = calibrate_gauge(d, kappa, eps, profile);
    e["g0"] = gauge.g0;
    e["gauge_scale"] = num(gauge.scale);
    ConditionContext ctx = make_context(cfg, system, profile, gauge.phi);
    CantorConfig cc;
    cc.f = f;
    cc.omega = omega;
    cc.epsilon = eps;
    cc.kappa = kappa;
    cc.min_generation = std::max(cfg.get_long("min_generation"), gauge.g0);
    cc.seed_cap = cfg.get_long("seed_cap");
    cc.mode = cfg.get("mode") == "threshold" ? LevelMode::Threshold : LevelMode::Desk;
    cc.min_branch = cfg.get_long("branch_min");
    cc.max_branch = cfg.get_long("branch_max");
    cc.j_cap = cfg.get_long("j_cap");
    cc.scan_budget = cfg.get_u64("scan_budget");
    cc.depth = cfg.get_long("depth");
    CantorTree tree;
    try {
      tree = build_tree(cc, ctx);
    } catch (const Error& err) {
      // Seed search failures leave no tree at all.
      e["depth"] = -1;
      e["failure"] = err.what();
      construction_failed = true;
      cert_csv << fixed(eps) << ',' << gauge.g0 << ',' << fixed(gauge.scale) << ",-1,,,,,,,,,,," << '"' << err.what()
               << '"' << '\n';
      o.result["trees"].push_back(e);
      continue;
    }
    const std::string tag = "eps" + std::to_string(k);
    out.write("tree_" + tag + ".json", tree_to_json(tree));
    out.write("summary_" + tag + ".csv", tree_summary_csv(tree));
    e["depth"] = tree.depth();
    e["failure"] = tree.failure;
    e["y"] = num(tree.seed.y[0].get_d());
    e["u0"] = tree.seed.u0.to_string();
    e["h"] = num(tree.seed.h);
    if (tree.depth() < cc.depth) construction_failed = true;
    // Extent of F_2 along the first axis, the localization evidence.
    if (tree.depth() >= 2) {
      BigRat lo = 1, hi = 0;
      for (const auto& node : tree.generations[2]) {
        lo = std::min(lo, node.cube.lower(0));
        hi = std::max(hi, node.cube.upper(0));
      }
      e["f2_extent"] = {num(lo.get_d()), num(hi.get_d())};
      e["f2_extent_exact"] = {to_fraction_string(lo), to_fraction_string(hi)};
    }
    std::string cert_row = ",,,,,,,,";
    if (tree.depth() >= 1) {
      ScalingReport sr = verify_scaling(tree, ctx);
      Certificate c = dimension_certificate(tree, ctx);
      LocalExponentReport le = local_exponents(tree);
      if (!sr.ok()) verification_failed = true;
      e["delta_eps"] = num(tree.delta_eps);
      e["certificate"] = num(c.scaling_exponent);
      e["h_eps"] = num(c.h_eps);
      e["min_local_exponent"] = num(c.min_local_exponent);
      e["required_exponent"] = num(c.required_exponent);
      e["scaling_ok"] = sr.ok();
      e["scaling_violations"] = sr.violations.size();
      e["nodes_checked"] = sr.nodes_checked;
      e["mass_ok"] = sr.mass_ok;
      e["avoidance_violations"] = sr.avoidance_violations;
      e["log2_global_constant"] = num(sr.log2_global_constant);
      std::ostringstream row;
      row << fixed(tree.delta_eps) << ',' << fixed(c.scaling_exponent) << ',' << fixed(c.h_eps) << ','
          << fixed(c.min_local_exponent) << ',' << fixed(c.required_exponent) << ',' << sr.violations.size() << ','
          << sr.nodes_checked << ',' << (sr.mass_ok ? 1 : 0) << ',' << sr.avoidance_violations << ','
          << fixed(sr.log2_global_constant);
      cert_row = row.str();
      for (std::size_t b = 0; b < le.histogram.size(); ++b)
        exp_csv << fixed(eps) << ',' << fixed(le.bin_edges[b]) << ',' << fixed(le.bin_edges[b + 1]) << ','
                << le.histogram[b] << '\n';
    }
    cert_csv << fixed(eps) << ',' << gauge.g0 << ',' << fixed(gauge.scale) << ',' << tree.depth() << ',' << cert_row
             << ",\"" << tree.failure << "\"\n";

    const std::uint64_t n_samples = cfg.get_u64("samples");
    if (tree.depth() >= 2 && n_samples > 0) {
      const std::uint64_t sample_seed = derive_seed(cfg.get_u64("seed"), "samples-" + tag);
      o.seeds["samples-" + tag] = sample_seed;
      double worst = 0;
      for (std::size_t s = 0; s < n_samples; ++s) {
        // One stream per sample keeps each point independent of the sample count.
        auto pts = sample_points(tree, 1, derive_seed(sample_seed, std::to_string(s)));
        const SamplePoint& p = pts.front();
        auto sys = rate_system(system, p.leaf.generation());
        if (!sys) break;
        RateEstimate est = delta_empirical(p.x, *sys, pow2(-tree.seed.u0.generation()));
        double diff = est.estimate - p.f_x;
        worst = std::max(worst, std::fabs(diff));
        sample_csv << fixed(eps) << ',' << s << ',' << fixed(p.x[0].get_d(), 17) << ',' << fixed(p.f_x) << ','
                   << fixed(p.deltas.empty() ? 0.0 : p.deltas.back()) << ',' << fixed(est.estimate) << ','
                   << fixed(diff) << '\n';
      }
      e["samples"] = n_samples;
      e["max_rate_difference"] = num(worst);
    }
    o.result["trees"].push_back(e);
  }
  out.write("certificates.csv", cert_csv.str());
  out.write("samples.csv", sample_csv.str());
  out.write("local_exponents.csv", exp_csv.str());
  if (construction_failed) {
    o.exit_code = kExitConstruction;
    o.message = "construction stopped before the configured depth";
  } else if (verification_failed) {
    o.exit_code = kExitVerification;
    o.message = "scaling inequality violated";
  } else {
    o.message = "trees built and verified";
  }
  return o;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  RunResult rr;
  try {
    config.validate();
  } catch (const Error& e) {
    rr.exit_code = kExitConfig;
    rr.message = e.what();
    return rr;
  }
  std::error_code fs_error;
  std::filesystem::create_directories(out_dir, fs_error);
  if (fs_error) {
    rr.exit_code = kExitConfig;
    rr.message = "cannot create output directory " + out_dir;
    return rr;
  }
  Writer out(out_dir);
  Outcome o;
  const std::string name = config.get("experiment");
  try {
    if (name == "c1") o = run_c1(config, out);
    else if (name == "c2") o = run_c2(config, out);
    else if (name == "P") o = run_P(config, out);
    else if (name == "threedist") o = run_threedist(config, out);
    else if (name == "poisson-mc") o = run_poisson(config, out);
    else if (name == "rate") o = run_rate(config, out);
    else if (name == "cover") o = run_cover(config, out);
    else o = run_tree(config, out, name == "jb");
  } catch (const Error& e) {
    // Invalid arguments reaching a module come from config values the schema cannot check alone.
    const bool config_fault = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidArgument;
    o.exit_code = config_fault ? kExitConfig
                  : e.code() == ErrorCode::ScalingViolation ? kExitVerification
                                                              : kExitConstruction;
    o.message = e.what();
  }
  o.result["experiment"] = name;
  o.result["message"] = o.message;
  o.result["exit_code"] = o.exit_code;
  out.write("result.json", o.result.dump(2) + "\n");

  json manifest;
  manifest["tool"] = "jblab";
  manifest["version"] = kVersion;
  manifest["experiment"] = name;
  manifest["config_hash"] = config.hash();
  manifest["config"] = config.to_text();
  json seeds = o.seeds;
  seeds["global"] = config.get_u64("seed");
  manifest["seeds"] = seeds;
  for (const auto& [file, digest] : out.files()) manifest["files"].push_back({{"name", file}, {"fnv1a", digest}});
  manifest["exit_code"] = o.exit_code;
  std::ofstream(std::filesystem::path(out_dir) / "manifest.json") << manifest.dump(2) << "\n";

  rr.exit_code = o.exit_code;
  rr.message = o.message;
  for (const auto& f : out.files()) rr.files.push_back(f.first);
  rr.files.push_back("manifest.json");
  return rr;
}

}  // namespace jblab
