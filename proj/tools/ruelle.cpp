// ruelle: command-line driver for the thermodynamic, twisted-operator, orbit, Dolgopyat and correlation tools.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "ruelle/ruelle.hpp"

namespace {

using namespace ruelle;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

enum Exit : int { kOk = 0, kFailure = 1, kSchema = 2, kCapacity = 3, kNumerical = 4 };

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for the non-finite values.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string num(cplx z) { return num(z.real()) + (z.imag() < 0 || std::signbit(z.imag()) ? "" : "+") + num(z.imag()) + "i"; }

struct Common {
  std::string model = "builtin:bernoulli-sqrt2";
  std::string out;
  std::uint64_t seed = 1;
  int threads = 0;
  double word_cap = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_model = true) {
  if (with_model)
    sub->add_option("--model", c.model, "model JSON file, or builtin:<name>")->capture_default_str();
  sub->add_option("--out", c.out, "output file (default: standard output)");
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker threads (0: RUELLE_THREADS, else 1)")->capture_default_str();
  if (with_model)
    sub->add_option("--word-cap", c.word_cap, "cap on enumerated words (0: the model's own)")->capture_default_str();
}

/// Metadata block shared by every output.
class Header {
 public:
  Header(std::string command, const Common& c) {
    put("tool", std::string("ruelle ") + kVersion);
    put("command", std::move(command));
    put("seed", std::to_string(c.seed));
  }
  void model(const Model& m) {
    put("model", m.name.empty() ? "(unnamed)" : m.name);
    put("model_hash", model_hash(m));
  }
  void put(const std::string& k, std::string v) { rows_.emplace_back(k, std::move(v)); }
  void put(const std::string& k, double v) { put(k, num(v)); }
  void put(const std::string& k, int v) { put(k, std::to_string(v)); }
  void put(const std::string& k, std::size_t v) { put(k, std::to_string(v)); }
  void put(const std::string& k, bool v) { put(k, std::string(v ? "true" : "false")); }

  void write(std::ostream& os) const {
    for (const auto& [k, v] : rows_) os << "# " << k << ": " << v << '\n';
  }
  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : rows_) j[k] = v;
    return j;
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

using Table = std::vector<std::vector<std::string>>;

std::string csv_field(const std::string& s) { return s.find(',') == std::string::npos ? s : "\"" + s + "\""; }

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw std::runtime_error("cannot write output file " + path);
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_csv(const std::string& path, const Header& h, const std::vector<std::string>& cols, const Table& rows) {
  Sink sink(path);
  auto& os = sink.stream();
  h.write(os);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

Model open_model(const Common& c) { return load_model(c.model, static_cast<std::size_t>(c.word_cap)); }

/// "1.0+0.5i", "2", "-0.5i", "1e-3-2i".
cplx parse_complex(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (ch != ' ') s += ch;
  auto to_double = [&](const std::string& part) {
    if (part.empty() || part == "+") return 1.0;
    if (part == "-") return -1.0;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size()) throw SchemaError("--s", "cannot parse complex number '" + text + "'");
    return v;
  };
  if (s.empty()) throw SchemaError("--s", "empty complex number");
  if (s.back() != 'i') return {to_double(s), 0.0};
  s.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < s.size(); ++i)
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') split = i;
  if (split == std::string::npos) return {0.0, to_double(s)};
  return {to_double(s.substr(0, split)), to_double(s.substr(split))};
}

/// "lo:hi:step".
std::vector<double> parse_time_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw SchemaError("--t", "expected lo:hi:step, got '" + text + "'");
    }
  }
  if (parts.size() != 3) throw SchemaError("--t", "expected lo:hi:step, got '" + text + "'");
  try {
    return time_grid(parts[0], parts[1], parts[2]);
  } catch (const InvalidArgument& e) {
    throw SchemaError("--t", e.what());
  }
}

// ---------------------------------------------------------------------------------------------------------

struct ThermoArgs {
  Common c;
  std::string potential, roof, report;
  bool solve_pf = false;
  double pf = 0, a = 0, tol = 1e-13;
  int m = 6;
  std::size_t trajectory = 0;
  std::string trajectory_out;
};

int run_thermo(const ThermoArgs& o) {
  const Model model = open_model(o.c);
  const auto& f = model.potential_fn(o.potential);
  const auto& tau = model.roof_fn(o.roof);
  const double P = o.solve_pf ? solve_Pf(f, tau, o.tol) : o.pf;
  const auto sol = gibbs_state(f, tau, o.a, P);
  const auto g = f - ((P + o.a) * tau);
  const auto rep = gibbs_property_report(sol, g, o.m, true);

  Header h("thermo", o.c);
  h.model(model);
  h.put("potential", o.potential.empty() ? model.potential : o.potential);
  h.put("roof", o.roof.empty() ? model.roof : o.roof);
  h.put("P_f", P);
  h.put("P_f_solved", o.solve_pf);
  h.put("a", o.a);
  h.put("lambda", sol.lambda);
  h.put("pressure_g", std::log(sol.lambda));
  h.put("rpf_residual", sol.residual);
  h.put("rpf_iterations", sol.iterations);
  h.put("markov_defect", markov_defect(sol.normalized));
  h.put("subdominant_modulus", subdominant_modulus(sol.normalized));
  h.put("depth", o.m);
  h.put("c1", rep.c1);
  h.put("c2", rep.c2);
  Table rows;
  for (const auto& r : rep.rows) rows.push_back({csv_field(r.word.str()), num(r.nu), num(r.e_gm), num(r.ratio)});
  write_csv(o.report.empty() ? o.c.out : o.report, h, {"word", "nu", "e_gm", "ratio"}, rows);

  if (o.trajectory > 0) {
    const Word w = sample_trajectory(sol, o.trajectory, o.c.seed);
    Table t;
    for (std::size_t i = 0; i < w.size(); ++i) t.push_back({std::to_string(i), std::to_string(w[i])});
    write_csv(o.trajectory_out, h, {"index", "symbol"}, t);
  }
  return kOk;
}

struct TwistArgs {
  Common c;
  std::string potential, roof;
  double a = 0, b_min = 1, b_max = 128, rho = 0.9, b_step = 1;
  std::string grid = "pow2";
  bool symmetric = false;
  int m_cap = 400;
  ProbeConfig probes;
  int ly_m = 0, ly_trials = 4, ly_extra_depth = 2;
};

std::vector<double> b_grid(const TwistArgs& o) {
  if (!(o.b_min > 0 && o.b_max >= o.b_min)) throw SchemaError("--b-min", "need 0 < b-min <= b-max");
  std::vector<double> g;
  if (o.grid == "pow2") {
    for (double b = o.b_min; b <= o.b_max * (1 + 1e-12); b *= 2) g.push_back(b);
  } else {
    if (!(o.b_step > 0)) throw SchemaError("--b-step", "must be positive");
    for (double b = o.b_min; b <= o.b_max * (1 + 1e-12); b += o.b_step) g.push_back(b);
  }
  if (o.symmetric) {
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) g.push_back(-g[i]);
  }
  return g;
}

int run_twist(const TwistArgs& o) {
  const Model model = open_model(o.c);
  const auto tm = make_twist_model(model.potential_fn(o.potential), model.roof_fn(o.roof), o.a, model.theta);
  const auto grid = b_grid(o);
  ProbeConfig cfg = o.probes;
  cfg.seed = o.c.seed;
  const auto prof = contraction_scan(tm, grid, o.rho, o.m_cap, cfg, resolve_threads(o.c.threads));

  Header h("twist-scan", o.c);
  h.model(model);
  h.put("a", o.a);
  h.put("theta", model.theta);
  h.put("P_f", tm.gibbs.P_f);
  h.put("rho", o.rho);
  h.put("m_cap", o.m_cap);
  h.put("basis_depth", cfg.basis_depth);
  h.put("random_probes", cfg.random_probes);
  h.put("max_basis", cfg.max_basis);
  h.put("fitted_T", prof.fitted_T);
  h.put("slope", prof.slope);
  h.put("intercept", prof.intercept);
  h.put("r2", prof.r2);
  h.put("all_finite", prof.all_finite);
  if (o.ly_m > 0) {
    for (double b : grid) {
      const auto ly = lasota_yorke_check(tm, b, o.ly_m, o.ly_trials, o.c.seed, o.ly_extra_depth);
      h.put("lasota_yorke b=" + num(b), "m=" + std::to_string(ly.m) + " A0=" + num(ly.A0) + " B_max=" + num(ly.B_max) +
                                            " probes=" + std::to_string(ly.probes));
    }
  }
  Table rows;
  for (const auto& r : prof.rows)
    rows.push_back({num(r.b), num(r.spectral_radius), r.m_star ? std::to_string(*r.m_star) : "inf", num(prof.fitted_T)});
  write_csv(o.c.out, h, {"b", "spectral_radius", "m_star", "fitted_T"}, rows);
  return kOk;
}

struct OrbitArgs {
  Common c;
  std::string roof;
  double lambda_min = 1, lambda_max = 12, lambda_step = 1, cap = 1e8;
};

int run_orbits(const OrbitArgs& o) {
  const Model model = open_model(o.c);
  if (!(o.lambda_step > 0) || !(o.lambda_max >= o.lambda_min))
    throw SchemaError("--lambda-step", "need a positive step and lambda-min <= lambda-max");
  std::vector<double> grid;
  for (double l = o.lambda_min; l <= o.lambda_max + 1e-12; l += o.lambda_step) grid.push_back(l);
  const auto table = prime_orbit_count(model.roof_fn(o.roof), grid, o.cap);

  Header h("orbits", o.c);
  h.model(model);
  h.put("roof", o.roof.empty() ? model.roof : o.roof);
  h.put("h_T", table.h_T);
  h.put("symbolic_cutoff", table.symbolic_cutoff);
  h.put("orbit_cap", o.cap);
  Table rows;
  for (const auto& r : table.rows) rows.push_back({num(r.lambda), std::to_string(r.pi), num(r.li), num(r.ratio)});
  write_csv(o.c.out, h, {"lambda", "pi", "li", "ratio"}, rows);
  return kOk;
}

struct ZetaArgs {
  Common c;
  std::string roof, s = "1.0+0.0i";
  int nmax = 30, orbit_nmax = -1;
  double orbit_cap = 1e6;
};

int run_zeta(const ZetaArgs& o) {
  const Model model = open_model(o.c);
  const cplx s = parse_complex(o.s);
  const auto z = zeta_eval(model.roof_fn(o.roof), s, o.nmax, o.orbit_nmax, o.orbit_cap);

  Header h("zeta", o.c);
  h.model(model);
  h.put("roof", o.roof.empty() ? model.roof : o.roof);
  h.put("s", num(s));
  h.put("n_max", z.n_max);
  h.put("orbit_n_max", z.orbit_n_max);
  h.put("h_T", z.h_T);
  h.put("divergent", z.divergent);
  Table rows;
  auto add = [&](const char* q, cplx v) { rows.push_back({q, num(v.real()), num(v.imag())}); };
  add("value", z.value);
  add("truncated", z.truncated);
  add("log_partial", z.log_partial);
  add("tail", z.tail);
  add("partial_product", z.partial_product);
  if (z.determinant) add("determinant", *z.determinant);
  write_csv(o.c.out, h, {"quantity", "re", "im"}, rows);
  return kOk;
}

struct DolgopyatArgs {
  Common c;
  std::string potential, roof;
  double b = 16;
  LabConfig lab;
  int J_variant = 0;
  double a = 0;
  int members = 100, member_depth = 8, metric_depth = 8;
  double member_scale = 1.0;
  double stop_fraction = 0.5;
  double max_steps = 1e7;
  int bc_M = 0;
  BorelCantelliOptions bc;
};

json ledger_json(const ConstantLedger& L) {
  return {{"b", L.b},         {"theta", L.theta},   {"N", L.N},         {"delta1", L.delta1}, {"eps2", L.eps2},
          {"C6", L.C6},       {"eps3", L.eps3},     {"mu0", L.mu0},     {"gamma2", L.gamma2}, {"f_sup", L.f_sup},
          {"f_lip", L.f_lip}, {"tau_lip", L.tau_lip}, {"T0", L.T0},     {"E", L.E},           {"d3", L.d3},
          {"d4", L.d4},       {"C10", L.C10},       {"D1", L.D1},       {"D2", L.D2},         {"a0", L.a0},
          {"rho3", L.rho3},   {"S0", L.S0},         {"lambda2", L.lambda2}, {"r", L.r},       {"beta", L.beta},
          {"beta3", L.beta3}, {"rho4", L.rho4},     {"s", L.s},         {"k", L.k},           {"k_tilde", L.k_tilde},
          {"M", L.M},         {"decay_bound", L.decay_bound}};
}

json verdict(const std::string& name, bool holds, double margin, const std::string& note = "") {
  json v = {{"name", name}, {"holds", holds}, {"margin", margin}};
  if (!note.empty()) v["note"] = note;
  return v;
}

int run_dolgopyat(const DolgopyatArgs& o) {
  const Model model = open_model(o.c);
  const auto tm = make_twist_model(model.potential_fn(o.potential), model.roof_fn(o.roof), 0.0, model.theta);
  const auto fam = build_family(tm, o.b, o.lab);
  const JSet J = representative_set(fam, o.J_variant);
  const auto& L = fam.ledger;

  Header h("dolgopyat", o.c);
  h.model(model);
  h.put("b", o.b);
  h.put("a", o.a);

  json family = {{"length", fam.length}, {"colength", fam.colength}, {"cylinders", fam.cylinders.size()},
                 {"J_size", J.size()},   {"J_variant", o.J_variant}};
  double min_gap = std::numeric_limits<double>::infinity();
  std::size_t pairs = 0;
  for (const auto& cyl : fam.cylinders) {
    min_gap = std::min(min_gap, cyl.best_gap / std::pow(fam.theta(), fam.length));
    pairs += cyl.pairs.size();
  }
  family["pairs"] = pairs;
  family["min_best_gap_over_scale"] = min_gap;

  json verdicts = json::array();
  const auto chk = verify_family(fam, J);
  const double logb = std::log(std::abs(fam.b));
  const double scale = std::pow(fam.theta(), fam.length);
  verdicts.push_back(verdict("lengths", chk.lengths, std::min(fam.length - logb / L.D2, L.D1 * logb - fam.length)));
  verdicts.push_back(verdict("diameters", chk.diameters, std::min(scale * std::abs(fam.b) - L.eps2, L.C6 - scale * std::abs(fam.b))));
  verdicts.push_back(verdict("separation", chk.separation, chk.min_delta - L.delta1, "min recomputed gap / theta^s against delta1"));
  verdicts.push_back(verdict("balance", chk.balance, 0.0, "sub-cylinder masses within the factor d3 (d3 is measured)"));
  verdicts.push_back(verdict("disjoint", chk.disjoint, 0.0));
  verdicts.push_back(verdict("representative", chk.representative, 0.0, "mass of J in each C'_m >= d4 / (4 d3) nu(C'_m)"));
  verdicts.push_back(verdict("omega_range", chk.omega_range, 0.5 - L.mu0, "1/2 <= 1 - mu0 <= omega_J <= 1"));
  verdicts.push_back(verdict("rho3_below_one", L.rho3 < 1, 1 - L.rho3));

  const auto ms = metric_step_check(fam, J, std::max(o.metric_depth, fam.gamma_length()));
  verdicts.push_back(verdict("metric_contraction_matched", ms.violations_case2 == 0, 1 - ms.worst_case2,
                             std::to_string(ms.violations_case2) + " violations over " + std::to_string(ms.pairs) + " pairs"));
  verdicts.push_back(verdict("metric_contraction_unmatched", ms.violations_case3 == 0, 1 - ms.worst_case3,
                             std::to_string(ms.violations_case3) + " violations; D(u, u') = 1 pairs with no matched sub-cylinder"));

  std::mt19937_64 rng(make_rng(o.c.seed, static_cast<std::uint64_t>(std::abs(o.b)))());
  int members = 0, attempts = 0, cs_ok = 0, a_ok = 0, b_ok = 0, chain_ok = 0;
  double cs_worst = 0, ratio_a = 0, ratio_b = 0, chain_worst = 0;
  while (members < o.members && attempts < 20 * std::max(o.members, 1)) {
    ++attempts;
    auto H = random_cone_member(fam, std::max(o.member_depth, fam.gamma_length()), o.member_scale, rng);
    if (!cone_KE_test(H, fam, L.E, J)) continue;
    ++members;
    const auto rep = cone_step_checks(H, fam, J, o.a);
    cs_ok += rep.cauchy_schwarz;
    a_ok += rep.a_holds;
    b_ok += rep.b_holds;
    chain_ok += rep.chain;
    cs_worst = std::max(cs_worst, rep.cs_worst);
    ratio_a = std::max(ratio_a, rep.ratio_a);
    ratio_b = std::max(ratio_b, rep.rhs_b > 0 ? rep.lhs_b / rep.rhs_b : 0.0);
    chain_worst = std::max(chain_worst, rep.chain_worst);
  }
  const std::string of = "/" + std::to_string(members) + " cone members";
  family["cone_members"] = members;
  family["cone_attempts"] = attempts;
  verdicts.push_back(verdict("cauchy_schwarz_step", members > 0 && cs_ok == members, 1 - cs_worst, std::to_string(cs_ok) + of));
  verdicts.push_back(verdict("cone_mass_ratio", members > 0 && a_ok == members, L.C10 - ratio_a, std::to_string(a_ok) + of));
  verdicts.push_back(verdict("l2_step", members > 0 && b_ok == members, 1 - ratio_b, std::to_string(b_ok) + of));
  verdicts.push_back(verdict("chain", members > 0 && chain_ok == members, 1 - chain_worst, std::to_string(chain_ok) + of));

  std::vector<JSet> seq = {J, representative_set(fam, 1 - o.J_variant)};
  const auto curve = iterate_NJ(fam, seq, o.a, static_cast<std::size_t>(o.max_steps), o.stop_fraction);
  json decay = {{"initial", curve.values.front()}, {"final", curve.values.back()}, {"steps", curve.steps()},
                {"M", curve.M_budget},           {"bound", curve.bound},          {"strictly_decreasing", curve.strictly_decreasing},
                {"reached_stop_fraction", curve.halved}};
  verdicts.push_back(verdict("decay_monotone", curve.strictly_decreasing, 0.0));
  verdicts.push_back(verdict("decay_within_M", curve.halved && static_cast<double>(curve.steps()) <= curve.M_budget,
                             curve.M_budget - static_cast<double>(curve.steps()),
                             "steps to reach the stop fraction against M = ceil(k_tilde log|b|)"));

  json out = {{"header", h.to_json()}, {"ledger", ledger_json(L)}, {"family", family}, {"decay", decay}};
  if (o.bc_M > 0) {
    BorelCantelliOptions bo = o.bc;
    bo.seed = o.c.seed;
    bo.threads = resolve_threads(o.c.threads);
    const auto bc = borel_cantelli_stats(fam, o.bc_M, bo);
    out["borel_cantelli"] = {{"M", bc.M},           {"exact", bc.exact},         {"samples", bc.samples},
                             {"nu_V", bc.nu_V},     {"gamma2", bc.gamma2},       {"second_moment", bc.second_moment},
                             {"epsilon", bc.epsilon}, {"nu_U_eps", bc.nu_U_eps}, {"nu_U_eps_se", bc.nu_U_eps_se},
                             {"ell", bc.ell},       {"r", bc.r},                 {"beta", bc.beta},
                             {"cluster", bc.cluster}, {"cluster_envelope", bc.cluster_envelope}};
    verdicts.push_back(verdict("borel_cantelli", bc.verdict, bc.epsilon - bc.nu_U_eps, "nu(U_eps) < eps"));
  }
  out["verdicts"] = verdicts;
  Sink sink(o.c.out);
  sink.stream() << out.dump(2) << '\n';
  return kOk;
}

struct CorrelateArgs {
  Common c;
  std::string potential, roof, A, B, t = "0:20:0.5";
  std::size_t n = 1000000, blocks = 100;
  int base_lag = 0;
};

int run_correlate(const CorrelateArgs& o) {
  const Model model = open_model(o.c);
  const auto& f = model.potential_fn(o.potential);
  const auto& tau = model.roof_fn(o.roof);
  if (o.A.empty() || o.B.empty()) throw SchemaError("--A/--B", "both observables are required");
  const auto A = load_observable(o.A, model.shift);
  const auto B = load_observable(o.B, model.shift);
  const auto grid = parse_time_grid(o.t);
  const double P = solve_Pf(f, tau);
  const auto sol = gibbs_state(f, tau, 0.0, P);
  CorrelationOptions opt;
  opt.samples = o.n;
  opt.seed = o.c.seed;
  opt.blocks = o.blocks;
  opt.threads = resolve_threads(o.c.threads);
  const auto curve = correlation(sol, tau, A, B, grid, opt);

  Header h("correlate", o.c);
  h.model(model);
  h.put("roof", o.roof.empty() ? model.roof : o.roof);
  h.put("P_f", P);
  h.put("samples", curve.samples);
  h.put("blocks", curve.blocks);
  h.put("mean_A", curve.mean_A);
  h.put("mean_B", curve.mean_B);
  h.put("fit_accepted", curve.fit.accepted);
  h.put("fit_points", curve.fit.points);
  h.put("fit_C", curve.fit.C);
  h.put("fit_c", curve.fit.c);
  h.put("fit_c_se", curve.fit.c_se);
  h.put("fit_c_lo", curve.fit.c_lo);
  h.put("fit_c_hi", curve.fit.c_hi);
  h.put("fit_r2", curve.fit.r2);
  for (int n = 0; n < o.base_lag + 1 && o.base_lag > 0; ++n) {
    const auto bc = exact_base_correlation_report(sol, A.base, B.base, n);
    h.put("base_correlation n=" + std::to_string(n), num(bc.value) + " (rho4 " + num(bc.rho4) + ")");
  }
  Table rows;
  for (std::size_t i = 0; i < curve.t.size(); ++i) rows.push_back({num(curve.t[i]), num(curve.rho[i]), num(curve.se[i])});
  write_csv(o.c.out, h, {"t", "rho", "se"}, rows);
  return kOk;
}

int run_selftest(int threads) {
  const auto results = acceptance::run_all(std::cout, threads);
  return acceptance::all_pass(results) ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ruelle: transfer operators, twisted operators, periodic orbits and correlation decay for suspension flows"};
  app.set_version_flag("--version", std::string("ruelle ") + kVersion);
  app.require_subcommand(1);

  std::function<int()> action;

  ThermoArgs th;
  auto* thermo = app.add_subcommand("thermo", "pressure, Gibbs state and Gibbs-inequality report");
  add_common(thermo, th.c);
  thermo->add_option("--potential", th.potential, "potential name (default: the model's)");
  thermo->add_option("--roof", th.roof, "roof name (default: the model's)");
  thermo->add_flag("--solve-pf", th.solve_pf, "solve Pr(f - P tau) = 0 for P_f");
  thermo->add_option("--pf", th.pf, "P_f to use without --solve-pf")->capture_default_str();
  thermo->add_option("--a", th.a, "real shift a in f - (P_f + a) tau")->capture_default_str();
  thermo->add_option("--tol", th.tol, "P_f root tolerance")->capture_default_str();
  thermo->add_option("--m", th.m, "cylinder length of the report")->capture_default_str()->check(CLI::PositiveNumber);
  thermo->add_option("--report", th.report, "Gibbs report CSV (default: --out)");
  thermo->add_option("--trajectory", th.trajectory, "also sample a nu-typical word of this length")->capture_default_str();
  thermo->add_option("--trajectory-out", th.trajectory_out, "trajectory CSV (default: standard output)");
  thermo->callback([&] { action = [&] { return run_thermo(th); }; });

  TwistArgs tw;
  auto* twist = app.add_subcommand("twist-scan", "spectral radius and eventual contraction of L_ab over a b grid");
  add_common(twist, tw.c);
  twist->add_option("--potential", tw.potential, "potential name (default: the model's)");
  twist->add_option("--roof", tw.roof, "roof name (default: the model's)");
  twist->add_option("--a", tw.a, "real part a")->capture_default_str();
  twist->add_option("--b-min", tw.b_min, "smallest |b|")->capture_default_str();
  twist->add_option("--b-max", tw.b_max, "largest |b|")->capture_default_str();
  twist->add_option("--grid", tw.grid, "b grid: pow2 (doubling) or linear")->capture_default_str()->check(CLI::IsMember({"pow2", "linear"}));
  twist->add_option("--b-step", tw.b_step, "step of the linear grid")->capture_default_str();
  twist->add_flag("--symmetric", tw.symmetric, "also scan -b");
  twist->add_option("--rho", tw.rho, "contraction rate")->capture_default_str();
  twist->add_option("--m-cap", tw.m_cap, "largest m tried")->capture_default_str()->check(CLI::PositiveNumber);
  twist->add_option("--basis-depth", tw.probes.basis_depth, "depth of the indicator probes")->capture_default_str();
  twist->add_option("--random-probes", tw.probes.random_probes, "number of random Lipschitz probes")->capture_default_str();
  twist->add_option("--max-basis", tw.probes.max_basis, "cap on indicator probes")->capture_default_str();
  twist->add_option("--ly-m", tw.ly_m, "also measure the Lasota-Yorke constant at this m (0: skip)")->capture_default_str();
  twist->add_option("--ly-trials", tw.ly_trials, "random probe pairs per Lasota-Yorke check")->capture_default_str();
  twist->add_option("--ly-extra-depth", tw.ly_extra_depth, "extra depth of Lasota-Yorke probes")->capture_default_str();
  twist->callback([&] { action = [&] { return run_twist(tw); }; });

  OrbitArgs ob;
  auto* orbits = app.add_subcommand("orbits", "prime orbit counting pi(lambda) against li(e^{h_T lambda})");
  add_common(orbits, ob.c);
  orbits->add_option("--roof", ob.roof, "roof name (default: the model's)");
  orbits->add_option("--lambda-min", ob.lambda_min, "first grid point")->capture_default_str();
  orbits->add_option("--lambda-max", ob.lambda_max, "last grid point")->capture_default_str();
  orbits->add_option("--lambda-step", ob.lambda_step, "grid spacing")->capture_default_str();
  orbits->add_option("--orbit-cap", ob.cap, "cap on enumerated orbits")->capture_default_str();
  orbits->callback([&] { action = [&] { return run_orbits(ob); }; });

  ZetaArgs ze;
  ze.c.model = "builtin:constant-roof";
  auto* zeta = app.add_subcommand("zeta", "Ruelle zeta function of the flow at a complex s");
  add_common(zeta, ze.c);
  zeta->add_option("--roof", ze.roof, "roof name (default: the model's)");
  zeta->add_option("--s", ze.s, "complex argument, e.g. 1.0+0.0i")->capture_default_str();
  zeta->add_option("--nmax", ze.nmax, "largest period in the trace sum")->capture_default_str();
  zeta->add_option("--orbit-nmax", ze.orbit_nmax, "period cutoff of the orbit product (-1: automatic)")->capture_default_str();
  zeta->add_option("--orbit-cap", ze.orbit_cap, "cap on orbits in the product")->capture_default_str();
  zeta->callback([&] { action = [&] { return run_zeta(ze); }; });

  DolgopyatArgs dg;
  dg.c.model = "builtin:interaction";
  auto* dolg = app.add_subcommand("dolgopyat", "build the Dolgopyat family at b and check every inequality");
  add_common(dolg, dg.c);
  dolg->add_option("--potential", dg.potential, "potential name (default: the model's)");
  dolg->add_option("--roof", dg.roof, "roof name (default: the model's)");
  dolg->add_option("--b", dg.b, "imaginary part b, |b| >= e^2")->capture_default_str();
  dolg->add_option("--N", dg.lab.N, "branch length N")->capture_default_str();
  dolg->add_option("--delta1", dg.lab.delta1, "separation constant delta1")->capture_default_str();
  dolg->add_option("--s", dg.lab.s, "target exponent s in 2 / |b|^{8s}")->capture_default_str();
  dolg->add_option("--max-colength", dg.lab.max_colength, "largest sub-cylinder co-length tried")->capture_default_str();
  dolg->add_option("--J-variant", dg.J_variant, "representative set variant (0 or 1)")->capture_default_str()->check(CLI::Range(0, 1));
  dolg->add_option("--a", dg.a, "real part a used by N_J")->capture_default_str();
  dolg->add_option("--members", dg.members, "cone members tested")->capture_default_str();
  dolg->add_option("--member-depth", dg.member_depth, "depth of random cone members")->capture_default_str();
  dolg->add_option("--member-scale", dg.member_scale, "Lipschitz scale of random cone members")->capture_default_str();
  dolg->add_option("--metric-depth", dg.metric_depth, "block depth of the metric contraction check")->capture_default_str();
  dolg->add_option("--stop-fraction", dg.stop_fraction, "stop iterating N_J below this fraction of the start")->capture_default_str();
  dolg->add_option("--max-steps", dg.max_steps, "cap on N_J iterations")->capture_default_str();
  dolg->add_option("--bc-M", dg.bc_M, "Borel-Cantelli window M (0: skip)")->capture_default_str();
  dolg->add_option("--bc-gamma2", dg.bc.gamma2, "Borel-Cantelli gamma2 (<= 0: the ledger's)")->capture_default_str();
  dolg->add_option("--bc-beta", dg.bc.beta, "cluster decay rate beta (<= 0: e^{-r})")->capture_default_str();
  dolg->add_option("--bc-cluster-n", dg.bc.cluster_n_max, "cluster lags (0: ell + 12)")->capture_default_str();
  dolg->add_option("--bc-samples", dg.bc.samples, "Monte Carlo samples beyond the exact cap")->capture_default_str();
  dolg->add_option("--bc-exact-cap", dg.bc.exact_cap, "largest exact dynamic program (states x (M + 1))")->capture_default_str();
  dolg->callback([&] { action = [&] { return run_dolgopyat(dg); }; });

  CorrelateArgs co;
  auto* corr = app.add_subcommand("correlate", "Monte Carlo correlation rho(t) of the suspension flow and decay fit");
  add_common(corr, co.c);
  corr->add_option("--potential", co.potential, "potential name (default: the model's)");
  corr->add_option("--roof", co.roof, "roof name (default: the model's)");
  corr->add_option("--A", co.A, "observable A (JSON)")->required();
  corr->add_option("--B", co.B, "observable B (JSON)")->required();
  corr->add_option("--t", co.t, "time grid lo:hi:step")->capture_default_str();
  corr->add_option("--n", co.n, "Monte Carlo samples")->capture_default_str();
  corr->add_option("--blocks", co.blocks, "jackknife blocks")->capture_default_str();
  corr->add_option("--base-lag", co.base_lag, "also report exact base-map correlations of the base parts up to this lag")
      ->capture_default_str();
  corr->callback([&] { action = [&] { return run_correlate(co); }; });

  int st_threads = 0;
  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  self->add_option("--threads", st_threads, "worker threads (0: RUELLE_THREADS, else 1)")->capture_default_str();
  self->callback([&] { action = [&] { return run_selftest(st_threads); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return action();
  } catch (const SchemaError& e) {
    std::cerr << "ruelle: schema error at " << e.what() << '\n';
    return kSchema;
  } catch (const CapacityError& e) {
    std::cerr << "ruelle: capacity exceeded: " << e.what() << " (requested " << num(e.requested()) << ", cap " << num(e.cap())
              << ")\n";
    return kCapacity;
  } catch (const Error& e) {
    std::cerr << "ruelle: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "ruelle: " << e.what() << '\n';
    return kFailure;
  }
}
