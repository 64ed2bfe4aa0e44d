#include "cli.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "adm3/catalog.hpp"
#include "adm3/classify.hpp"
#include "adm3/cwt.hpp"
#include "adm3/dual.hpp"
#include "adm3/io.hpp"
#include "adm3/report.hpp"
#include "adm3/wavelet.hpp"

namespace adm3::cli {

namespace {

using io::Json;
using io::Report;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by the commands; each command registers the ones it reads.
struct Opts {
  std::string family;
  std::vector<std::string> params;
  std::string algebra;
  std::string in, out, json;
  std::string wavelet, coeffs;
  std::string grid;
  std::uint64_t seed = 1;
  double tol = -1;  // < 0: command default
  int r = 3;
  int n = 64;
  double spacing = 0;  // 0: 1 / n
  std::string kind = "bump";
  std::string xi;
  std::string nlist = "0,10,100,1000";
  double c_psi = 0;  // 0: compute
  std::size_t samples = 10000;
  double k0 = 6, sigma = 1;
};

Json mat_json(const Mat3& m) {
  Json j = Json::array();
  for (int i = 0; i < 3; ++i) j.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return j;
}

Json vec_json(const Vec3& v) { return {v[0], v[1], v[2]}; }

Json params_json(const FamilyParams& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p.values) j[k] = v;
  return j;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.empty()) throw Usage(std::string("bad number '") + tok + "' in " + what);
    out.push_back(v);
  }
  return out;
}

FamilySpec family_of(const Opts& o) {
  if (o.family.empty()) throw Usage("--family is required");
  Family f;
  try {
    f = family_from_tag(o.family);
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
  FamilyParams p;
  for (const auto& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Usage("--param expects name=value, got '" + kv + "'");
    const auto v = parse_list(kv.substr(eq + 1), "--param");
    if (v.size() != 1) throw Usage("--param expects one value");
    p.values[kv.substr(0, eq)] = v[0];
  }
  const auto known = param_info(f);
  for (const auto& [k, v] : p.values) {
    bool ok = false;
    for (const auto& i : known) ok = ok || i.name == k;
    if (!ok) throw Usage("family " + o.family + " has no parameter '" + k + "'");
  }
  try {
    return FamilySpec(f, with_defaults(f, p));
  } catch (const InvalidParams& e) {
    throw Usage(std::string("invalid parameters: ") + e.what());
  }
}

struct GridArgs {
  double spread = kDefaultSpread;
  double shear = kDefaultShear;
  std::vector<int> steps;  // empty: defaults
  int refine = 1;
};

GridArgs parse_grid(const std::string& s) {
  GridArgs g;
  if (s.empty()) return g;
  std::stringstream ss(s);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Usage("--grid expects key=value pairs, got '" + kv + "'");
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "spread" || k == "shear") {
      const auto x = parse_list(v, "--grid");
      if (x.size() != 1 || !(x[0] > 0)) throw Usage("--grid " + k + " must be one positive number");
      (k == "spread" ? g.spread : g.shear) = x[0];
    } else if (k == "steps") {
      std::string w = v;
      std::replace(w.begin(), w.end(), '/', ',');
      for (double x : parse_list(w, "--grid steps")) {
        if (x < 1 || x != std::floor(x)) throw Usage("--grid steps must be positive integers");
        g.steps.push_back(static_cast<int>(x));
      }
    } else if (k == "refine") {
      const auto x = parse_list(v, "--grid refine");
      if (x.size() != 1 || x[0] < 1 || x[0] != std::floor(x[0])) throw Usage("--grid refine must be a positive integer");
      g.refine = static_cast<int>(x[0]);
    } else {
      throw Usage("unknown --grid key '" + k + "'");
    }
  }
  return g;
}

DilationGrid make_grid(const FamilySpec& fam, const GridArgs& a) {
  std::vector<int> steps = a.steps;
  if (steps.empty()) {
    steps = default_steps(fam, a.refine);
  } else {
    if (steps.size() == 1) steps.assign(fam.dim(), steps[0]);
    if (steps.size() != fam.dim()) throw Usage("--grid steps needs 1 or " + std::to_string(fam.dim()) + " values");
    for (int& s : steps) s *= a.refine;
  }
  return build_dilation_grid(fam, a.spread, steps, a.shear);
}

Json grid_json(const DilationGrid& g) {
  return {{"spread", g.spread}, {"shear", g.shear}, {"steps", g.steps},
          {"nodes", g.nodes.size()}, {"cell", g.cell}, {"kappa", g.kappa}};
}

std::string need(const std::string& v, const char* flag) {
  if (v.empty()) throw Usage(std::string(flag) + " is required");
  return v;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Usage("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Volume load_volume(const std::string& path) {
  try {
    return io::read_volume(path);
  } catch (const io::FormatError& e) {
    throw Usage(path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw Usage(e.what());
  }
}

// V3D1 samples plus the side-car PATH.json when present.
Wavelet load_wavelet(const std::string& path, const Opts& o, const FamilySpec* fam) {
  const Volume v = load_volume(path);
  const std::string meta_path = path + ".json";
  if (std::ifstream(meta_path)) return io::rebuild_wavelet(io::parse_wavelet_meta(read_text(meta_path)), v);
  const VanishingPattern p = fam ? catalogue_pattern(fam->id(), o.r) : VanishingPattern{};
  return wavelet_from_samples(v.grid, v.samples, p, "file:" + path);
}

double resolve_c_psi(const Opts& o, const Wavelet& psi, const FamilySpec& fam, Json& inputs, Json& results) {
  if (o.c_psi > 0) {
    inputs["c_psi"] = o.c_psi;
    return o.c_psi;
  }
  const auto ad = admissibility_constant(psi, fam);
  results["admissibility"] = {{"status", to_string(ad.status)}, {"c_psi", ad.c_psi}, {"rel_change", ad.rel_change}};
  if (!ad.finite()) throw std::domain_error("wavelet is not admissible for this family: " + to_string(ad.status));
  return ad.c_psi;
}

// ---------------------------------------------------------------- commands

int cmd_list_groups(const Opts&, Report& r) {
  Json rows = Json::array();
  for (Family f : all_families()) {
    Json ps = Json::array();
    for (const auto& p : param_info(f))
      ps.push_back({{"name", p.name}, {"default", p.default_value}, {"constraint", p.constraint}});
    const FamilySpec fam(f);
    rows.push_back({{"tag", family_tag(f)}, {"solvable", is_solvable(f)}, {"dim", fam.dim()}, {"params", ps}});
  }
  r.results["groups"] = rows;
  return kOk;
}

int cmd_group_info(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  Json& res = r.results;
  res["dim"] = fam.dim();
  res["solvable"] = is_solvable(fam.id());
  Json coords = Json::array();
  for (const auto& c : fam.coords()) {
    static const char* kinds[] = {"log", "additive", "angle", "polar"};
    coords.push_back({{"name", c.name}, {"kind", kinds[static_cast<int>(c.kind)]}});
  }
  res["chart"] = coords;
  Json basis = Json::array();
  for (const auto& m : fam.lie_basis().mats) basis.push_back(mat_json(m));
  res["lie_basis"] = basis;
  res["modular_character"] = fam.modular_character();
  res["finite_extension_size"] = fam.finite_extension().size();
  const auto& oc = orbit_chart(fam.id());
  res["open_orbits"] = oc.open_orbits.size();
  res["complement_components"] = oc.oc_components;
  Json bp = Json::array();
  for (const auto& b : oc.base_points) bp.push_back(vec_json(b));
  res["base_points"] = bp;
  res["degeneracy_notes"] = degeneracy_notes(fam.id(), fam.params());
  res["atom_exponent"] = default_atom_exponent(fam);
  res["orbit_measure_constant"] = orbit_measure_constant(fam);
  return kOk;
}

int verify_algebra(const Opts& o, Report& r) {
  const auto text = read_text(o.algebra);
  io::AlgebraFile a;
  try {
    a = io::parse_algebra(text);
  } catch (const std::exception& e) {
    throw Usage(o.algebra + ": " + e.what());
  }
  r.inputs["algebra"] = text;
  r.inputs["seed"] = o.seed;
  const LieAlgebraBasis basis{a.mats};
  const auto cls = classify(basis);
  const auto adm = check_admissible(basis, 16, o.seed);
  r.results["classification"] = {{"verdict", to_string(cls.verdict)}, {"reason", cls.reason}};
  if (cls.verdict == Verdict::Family) {
    r.results["classification"]["family"] = family_tag(cls.family);
    r.results["classification"]["params"] = params_json(cls.params);
  }
  r.results["admissible"] = {{"candidate", adm.candidate}, {"failed_gate", to_string(adm.failed)}, {"detail", adm.detail}};
  return adm.candidate ? kOk : kVerificationFailed;
}

int cmd_verify(const Opts& o, Report& r) {
  if (!o.algebra.empty()) return verify_algebra(o, r);
  const FamilySpec fam = family_of(o);
  const Family f = fam.id();
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["seed"] = o.seed;
  r.inputs["samples"] = o.samples;
  const double tol = o.tol > 0 ? o.tol : 1e-10;
  r.inputs["tol"] = tol;
  bool ok = true;

  const auto pts = sample_orbit_points(f, 200, o.seed);
  const auto comp = sample_complement_points(f, 200, o.seed + 1);
  int open_rank3 = 0, comp_low = 0, sigma_ok = 0, sigma_skipped = 0, compact = 0;
  for (const auto& p : pts) open_rank3 += orbit_map_rank(fam.lie_basis(), p) == 3;
  for (const auto& p : comp) comp_low += orbit_map_rank(fam.lie_basis(), p) <= 2;
  const auto& oc = orbit_chart(f);
  for (const auto& p : pts) {
    try {
      const auto s = cross_section(fam, p);
      const Vec3 xi0 = oc.base_points[static_cast<std::size_t>(oc.orbit_index(p))];
      sigma_ok += norm(s.matrix.transpose() * xi0 - p) <= tol * norm(p);
    } catch (const std::overflow_error&) {
      ++sigma_skipped;
    }
  }
  const std::size_t n_stab = 50;
  for (std::size_t i = 0; i < n_stab; ++i) compact += stabilizer_algebra(fam.lie_basis(), pts[i]).compact;
  double chi = 0;
  for (double c : fam.modular_character()) chi = std::max(chi, std::abs(c));

  Json& res = r.results;
  res["orbit"] = {{"open_samples", pts.size()}, {"rank3", open_rank3}, {"complement_samples", comp.size()},
                  {"rank_le2", comp_low}};
  res["cross_section"] = {{"ok", sigma_ok}, {"skipped_overflow", sigma_skipped}};
  res["stabilizers"] = {{"probed", n_stab}, {"compact", compact}};
  res["modularity"] = {{"modular_character", fam.modular_character()}, {"nonunimodular_G", chi > 1e-12}};
  ok = ok && open_rank3 == static_cast<int>(pts.size()) && comp_low == static_cast<int>(comp.size());
  ok = ok && sigma_ok + sigma_skipped == static_cast<int>(pts.size());
  ok = ok && compact == static_cast<int>(n_stab) && chi > 1e-12;

  const double e = default_atom_exponent(fam);
  const auto scan = atom_criterion_scan(fam, e, o.samples, o.seed);
  Json probe = Json::array();
  for (const auto& p : scan.probe) probe.push_back({{"xi", vec_json(p.xi)}, {"value", p.value}});
  const bool satisfied = scan.bounded_b && scan.bounded_a && !scan.probe_diverges;
  res["atom_scan"] = {{"exponent", e},
                      {"sup_b", scan.sup_b},
                      {"sup_b_10x", scan.sup_b_10x},
                      {"ratio_b", scan.ratio_b},
                      {"bounded_b", scan.bounded_b},
                      {"sup_a", scan.sup_a},
                      {"ratio_a", scan.ratio_a},
                      {"bounded_a", scan.bounded_a},
                      {"probe_kind", scan.probe_kind},
                      {"probe", probe},
                      {"probe_diverges", scan.probe_diverges},
                      {"verdict", satisfied ? "bounded" : "divergent"}};
  res["passed"] = ok;
  return ok ? kOk : kVerificationFailed;
}

int cmd_classify(const Opts& o, Report& r) {
  need(o.algebra, "--algebra");
  const auto text = read_text(o.algebra);
  io::AlgebraFile a;
  try {
    a = io::parse_algebra(text);
  } catch (const std::exception& e) {
    throw Usage(o.algebra + ": " + e.what());
  }
  const double tol = o.tol > 0 ? o.tol : kZeroTol;
  r.inputs["algebra"] = text;
  r.inputs["tol"] = tol;
  ClassificationReport cls;
  try {
    cls = classify(LieAlgebraBasis{a.mats}, tol);
  } catch (const InvalidAlgebra& e) {
    throw Usage(e.what());
  }
  Json& res = r.results;
  res["verdict"] = to_string(cls.verdict);
  if (cls.verdict == Verdict::Family) {
    res["family"] = family_tag(cls.family);
    res["params"] = params_json(cls.params);
  }
  res["reason"] = cls.reason;
  res["notes"] = cls.notes;
  res["diagnostics"] = cls.diagnostics;
  const auto& ft = cls.features;
  res["features"] = {{"solvable", ft.solvable},
                     {"abelian", ft.abelian},
                     {"weight_count", ft.weight_count},
                     {"has_nonreal_weight", ft.has_nonreal_weight},
                     {"dim_nilpotent_ideal", ft.dim_nilpotent_ideal},
                     {"dim_characteristic_space", ft.dim_characteristic_space},
                     {"derived_series_dims", ft.derived_series_dims}};
  return cls.verdict == Verdict::Family ? kOk : kVerificationFailed;
}

Grid3 grid_from_opts(const Opts& o) {
  if (o.n < 8) throw Usage("--n must be at least 8");
  const double h = o.spacing > 0 ? o.spacing : 1.0 / o.n;
  return centered_grid(o.n, h);
}

int cmd_make_wavelet(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  const std::string out = need(o.out, "--out");
  const Grid3 g = grid_from_opts(o);
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["n"] = o.n;
  r.inputs["spacing"] = g.spacing[0];
  r.inputs["kind"] = o.kind;
  io::WaveletMeta meta;
  Wavelet w;
  if (o.kind == "bump") {
    if (o.r < 0) throw Usage("--r must be >= 0");
    r.inputs["r"] = o.r;
    meta.generator = "bump-deriv";
    meta.pattern = catalogue_pattern(fam.id(), o.r);
    meta.bump = default_bump(g);
    w = make_vanishing_wavelet(meta.pattern, g, meta.bump);
  } else if (o.kind == "shell") {
    meta.generator = "shell";
    meta.pattern = VanishingPattern{VanishingPattern::Kind::Origin, {}, 0};
    w = make_shell_wavelet(g);
  } else {
    throw Usage("--kind must be bump or shell");
  }
  meta.generator_id = w.generator_id;
  Volume v(g);
  v.samples = w.samples;
  io::write_volume(out, v);
  io::write_file_atomic(out + ".json", io::write_wavelet_meta(meta));
  Json& res = r.results;
  res["generator_id"] = w.generator_id;
  res["pattern"] = to_string(w.pattern);
  res["norm"] = w.norm();
  bool ok = true;
  if (o.kind == "bump" && o.r > 0) {
    const double tol = o.tol > 0 ? o.tol : 1e-6;
    r.inputs["tol"] = tol;
    const auto mc = verify_vanishing_moments(w, w.pattern, tol);
    const auto ds = decay_slope(w, fam.id(), 12, o.seed);
    res["moments"] = {{"pass", mc.pass}, {"worst", mc.worst}, {"worst_at", mc.worst_at}};
    res["decay"] = {{"min_slope", ds.min_slope}, {"slopes", ds.slopes}};
    ok = mc.pass && ds.min_slope >= o.r - 0.1;
  }
  res["passed"] = ok;
  return ok ? kOk : kVerificationFailed;
}

int cmd_admissibility(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  const std::string wp = need(o.wavelet.empty() ? o.in : o.wavelet, "--wavelet");
  const Wavelet w = load_wavelet(wp, o, &fam);
  QuadSpec q;
  if (o.tol > 0) q.rel_tol = o.tol;
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["wavelet"] = w.generator_id;
  r.inputs["rel_tol"] = q.rel_tol;
  const auto ad = admissibility_constant(w, fam, q);
  Json hist = Json::array();
  for (const auto& l : ad.history)
    hist.push_back({{"level", l.level}, {"core", l.core}, {"value", l.value}, {"error", l.error}, {"evals", l.evals}});
  r.results = {{"status", to_string(ad.status)}, {"c_psi", ad.c_psi}, {"rel_change", ad.rel_change},
               {"box", ad.box}, {"history", hist}, {"kappa", orbit_measure_constant(fam)}};
  return ad.finite() ? kOk : kVerificationFailed;
}

int cmd_make_volume(const Opts& o, Report& r) {
  const std::string out = need(o.out, "--out");
  const Grid3 g = grid_from_opts(o);
  r.inputs["n"] = o.n;
  r.inputs["spacing"] = g.spacing[0];
  r.inputs["k0"] = o.k0;
  r.inputs["sigma"] = o.sigma;
  Volume v;
  try {
    v = band_volume(g, o.k0, o.sigma);
  } catch (const std::invalid_argument& e) {
    throw Usage(e.what());
  }
  io::write_volume(out, v);
  r.results["norm"] = v.norm();
  return kOk;
}

int cmd_analyze(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  const Volume f = load_volume(need(o.in, "--in"));
  const Wavelet w = load_wavelet(need(o.wavelet, "--wavelet"), o, &fam);
  const std::string out = need(o.out, "--out");
  const DilationGrid dg = make_grid(fam, parse_grid(o.grid));
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["grid"] = grid_json(dg);
  r.inputs["wavelet"] = w.generator_id;
  const std::uint64_t bytes = std::uint64_t(dg.nodes.size()) * f.grid.size() * 16;
  if (bytes > (std::uint64_t(1) << 32)) throw Usage("coefficients would need " + std::to_string(bytes >> 20) + " MiB; use a coarser --grid");
  const Coefficients c = analyze(f, w, dg);
  io::write_coefficients(out, c);
  r.results["nodes"] = c.nodes.size();
  r.results["coefficients"] = c.nodes.size() * f.grid.size();
  return kOk;
}

int cmd_synthesize(const Opts& o, Report& r) {
  Coefficients c;
  try {
    c = io::read_coefficients(need(o.in, "--in"));
  } catch (const io::FormatError& e) {
    throw Usage(o.in + ": " + e.what());
  }
  const FamilySpec fam(c.family, c.params);
  const Wavelet w = load_wavelet(need(o.wavelet, "--wavelet"), o, &fam);
  const std::string out = need(o.out, "--out");
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["wavelet"] = w.generator_id;
  const double c_psi = resolve_c_psi(o, w, fam, r.inputs, r.results);
  const Volume v = synthesize(c, w, grid_of(c), c_psi);
  io::write_volume(out, v);
  r.results["c_psi"] = c_psi;
  r.results["norm"] = v.norm();
  return kOk;
}

int cmd_isometry(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  const Volume f = load_volume(need(o.in, "--in"));
  const Wavelet w = load_wavelet(need(o.wavelet, "--wavelet"), o, &fam);
  const DilationGrid dg = make_grid(fam, parse_grid(o.grid));
  const double tol = o.tol > 0 ? o.tol : 0.1;
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["grid"] = grid_json(dg);
  r.inputs["wavelet"] = w.generator_id;
  r.inputs["tol"] = tol;
  const double c_psi = resolve_c_psi(o, w, fam, r.inputs, r.results);
  const double ratio = isometry_check(f, w, dg, c_psi);
  r.results["ratio"] = ratio;
  r.results["c_psi"] = c_psi;
  r.results["passed"] = std::abs(ratio - 1) <= tol;
  return std::abs(ratio - 1) <= tol ? kOk : kVerificationFailed;
}

int cmd_nterm(const Opts& o, Report& r) {
  const Volume f = load_volume(need(o.in, "--in"));
  Coefficients c;
  try {
    c = io::read_coefficients(need(o.coeffs, "--coeffs"));
  } catch (const io::FormatError& e) {
    throw Usage(o.coeffs + ": " + e.what());
  }
  const FamilySpec fam(c.family, c.params);
  const Wavelet w = load_wavelet(need(o.wavelet, "--wavelet"), o, &fam);
  std::vector<std::size_t> ns;
  for (double v : parse_list(o.nlist, "--n-list")) {
    if (v < 0 || v != std::floor(v)) throw Usage("--n-list entries must be non-negative integers");
    ns.push_back(static_cast<std::size_t>(v));
  }
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["wavelet"] = w.generator_id;
  r.inputs["n_list"] = ns;
  const double c_psi = resolve_c_psi(o, w, fam, r.inputs, r.results);
  const auto res = nterm_error(f, c, w, grid_of(c), c_psi, ns);
  r.results["n"] = res.n;
  r.results["error"] = res.error;
  r.results["total"] = res.total;
  return kOk;
}

int cmd_orbit_probe(const Opts& o, Report& r) {
  const FamilySpec fam = family_of(o);
  const auto v = parse_list(need(o.xi, "--xi"), "--xi");
  if (v.size() != 3) throw Usage("--xi needs 3 comma-separated numbers");
  const Vec3 xi(v[0], v[1], v[2]);
  r.inputs["family"] = fam.tag();
  r.inputs["params"] = params_json(fam.params());
  r.inputs["xi"] = v;
  const auto& oc = orbit_chart(fam.id());
  const int idx = oc.orbit_index(xi);
  Json& res = r.results;
  res["orbit_index"] = idx;
  res["rank"] = orbit_map_rank(fam.lie_basis(), xi);
  res["dist_to_complement"] = oc.dist_to_complement(xi);
  res["envelope_A"] = envelope_A(fam.id(), xi);
  if (idx >= 0) {
    res["base_point"] = vec_json(oc.base_points[static_cast<std::size_t>(idx)]);
    res["phi"] = phi(fam, xi);
    try {
      const auto s = cross_section(fam, xi);
      res["cross_section"] = {{"chart", s.point.x}, {"matrix", mat_json(s.matrix)}};
    } catch (const std::overflow_error& e) {
      res["cross_section"] = e.what();
    }
  }
  const auto st = stabilizer_algebra(fam.lie_basis(), xi);
  Json gens = Json::array();
  for (const auto& m : st.algebra_generators) gens.push_back(mat_json(m));
  res["stabilizer"] = {{"dimension", st.dimension}, {"compact", st.compact},
                       {"max_norm_observed", st.max_norm_observed}, {"generators", gens}};
  return kOk;
}

void flatten(const Json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object() && !j.empty()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix + "." + it.key(), out);
  } else if (j.is_array() && !j.empty() && j.front().is_object()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out << prefix << " = " << j.dump() << "\n";
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Admissible dilation groups in three dimensions: catalogue, classification and wavelet transforms", "adm3"};
  app.require_subcommand(1);
  Opts o;

  auto fam_opts = [&](CLI::App* s) {
    s->add_option("--family", o.family, "catalogue tag, e.g. 2e");
    s->add_option("--param", o.params, "family parameter name=value (repeatable)");
  };
  auto json_opt = [&](CLI::App* s) { s->add_option("--json", o.json, "write the machine report to this path"); };

  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const Opts&, Report&);
  };
  const Cmd cmds[] = {
      {"list-groups", "list the 20 catalogue families and their parameters", cmd_list_groups},
      {"group-info", "chart, Lie algebra, modular character and orbit data of a family", cmd_group_info},
      {"verify", "orbit, stabilizer, modularity and atom-criterion checks for a family or algebra file", cmd_verify},
      {"classify", "identify an algebra file with a catalogue family", cmd_classify},
      {"make-wavelet", "build a wavelet with vanishing moments on the orbit complement", cmd_make_wavelet},
      {"make-volume", "write a band-concentrated test volume", cmd_make_volume},
      {"admissibility", "admissibility integral of a wavelet for a family", cmd_admissibility},
      {"analyze", "wavelet coefficients of a volume on a dilation grid", cmd_analyze},
      {"synthesize", "reconstruct a volume from coefficients", cmd_synthesize},
      {"isometry", "discrete isometry ratio of a volume", cmd_isometry},
      {"nterm", "greedy n-term approximation errors", cmd_nterm},
      {"orbit-probe", "orbit, cross-section and stabilizer at a frequency", cmd_orbit_probe},
  };
  std::map<CLI::App*, const Cmd*> by_app;
  for (const Cmd& c : cmds) {
    CLI::App* s = app.add_subcommand(c.name, c.help);
    by_app[s] = &c;
    json_opt(s);
    const std::string n = c.name;
    if (n != "list-groups" && n != "classify" && n != "synthesize" && n != "nterm" && n != "make-volume") fam_opts(s);
    if (n == "verify" || n == "classify") s->add_option("--algebra", o.algebra, "algebra text file");
    if (n == "verify" || n == "make-wavelet" || n == "analyze") s->add_option("--seed", o.seed, "random seed");
    if (n == "verify") s->add_option("--samples", o.samples, "atom-scan sample count (the 10x run uses ten times more)");
    if (n == "verify" || n == "classify" || n == "make-wavelet" || n == "admissibility" || n == "isometry")
      s->add_option("--tol", o.tol, "tolerance (command specific default)");
    if (n == "make-wavelet" || n == "make-volume" || n == "analyze" || n == "synthesize" || n == "isometry" ||
        n == "nterm" || n == "admissibility") {
      if (n != "make-wavelet" && n != "make-volume") s->add_option("--in", o.in, "input file");
      if (n == "make-wavelet" || n == "make-volume" || n == "analyze" || n == "synthesize")
        s->add_option("--out", o.out, "output file");
    }
    if (n == "analyze" || n == "synthesize" || n == "isometry" || n == "nterm" || n == "admissibility")
      s->add_option("--wavelet", o.wavelet, "wavelet V3D1 file (side-car PATH.json)");
    if (n == "analyze" || n == "isometry") s->add_option("--grid", o.grid, "dilation grid: spread=..,shear=..,steps=N or N/N/N,refine=..");
    if (n == "synthesize" || n == "isometry" || n == "nterm") s->add_option("--c-psi", o.c_psi, "admissibility constant (computed when omitted)");
    if (n == "make-wavelet" || n == "analyze" || n == "synthesize" || n == "isometry" || n == "nterm" || n == "admissibility")
      s->add_option("--r", o.r, "vanishing order");
    if (n == "make-wavelet") s->add_option("--kind", o.kind, "bump or shell");
    if (n == "make-wavelet" || n == "make-volume") {
      s->add_option("--n", o.n, "samples per axis");
      s->add_option("--spacing", o.spacing, "sample spacing (default 1/n)");
    }
    if (n == "make-volume") {
      s->add_option("--k0", o.k0, "band centre per axis (cycles per unit)");
      s->add_option("--sigma", o.sigma, "band width");
    }
    if (n == "nterm") {
      s->add_option("--coeffs", o.coeffs, "coefficient C3W1 file");
      s->add_option("--n-list", o.nlist, "comma-separated term counts");
    }
    if (n == "orbit-probe") s->add_option("--xi", o.xi, "frequency a,b,c");
  }

  std::vector<std::string> argv_s{"adm3"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "adm3: " << e.what() << "\n";
    for (auto* s : app.get_subcommands())
      if (s->parsed()) err << s->help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Cmd* cmd = by_app.at(sub);
  Report rep;
  rep.command = cmd->name;
  int code = kOk;
  try {
    code = cmd->fn(o, rep);
  } catch (const Usage& e) {
    err << "adm3 " << cmd->name << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "adm3 " << cmd->name << ": " << e.what() << "\n";
    rep.results["error"] = e.what();
    code = kVerificationFailed;
  } catch (const std::exception& e) {
    err << "adm3 " << cmd->name << ": " << e.what() << "\n";
    return kUsage;
  }
  rep.results["exit_code"] = code;
  out << "command = " << rep.command << "\n";
  flatten(rep.inputs, "inputs", out);
  if (rep.command == "list-groups") {
    for (const auto& g : rep.results["groups"]) {
      std::string sig;
      for (const auto& p : g["params"]) {
        if (!sig.empty()) sig += ", ";
        sig += p["name"].get<std::string>() + " (" + p["constraint"].get<std::string>() + ")";
      }
      out << g["tag"].get<std::string>() << "\tdim " << g["dim"].get<int>() << "\t"
          << (g["solvable"].get<bool>() ? "solvable" : "non-solvable") << "\t" << (sig.empty() ? "-" : sig) << "\n";
    }
  } else {
    flatten(rep.results, "results", out);
  }
  out << "version = " << rep.version << "\ninputs_digest = " << rep.digest() << "\n";
  if (!o.json.empty()) io::write_file_atomic(o.json, io::write_report(rep));
  return code;
}

}  // namespace adm3::cli
