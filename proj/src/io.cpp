#include "adm3/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adm3/report.hpp"

namespace adm3::io {

ParseError::ParseError(int l, int c, const std::string& what)
    : std::runtime_error("line " + std::to_string(l) + ", column " + std::to_string(c) + ": " + what), line(l), column(c) {}

// ---------------------------------------------------------------- algebra text

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_label(const std::string& s, std::string& name) {
  if (s.size() < 2 || s.back() != ':') return false;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (!(std::isalnum(c) || c == '_' || c == '-' || c == '.')) return false;
  }
  if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-' || s[0] == '.') return false;
  name = s.substr(0, s.size() - 1);
  return true;
}

}  // namespace

AlgebraFile parse_algebra(const std::string& text) {
  AlgebraFile out;
  std::vector<std::string> labels;
  std::string pending;
  bool any_label = false;
  std::array<double, 9> cur{};
  int rows = 0;
  int block_line = 0;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  auto close_block = [&](int at) {
    if (rows == 0) return;
    if (rows != 3) throw ParseError(at, 1, "matrix starting on line " + std::to_string(block_line) + " has " +
                                               std::to_string(rows) + " rows, expected 3");
    Mat3 m;
    m.a = cur;
    out.mats.push_back(m);
    labels.push_back(pending);
    pending.clear();
    rows = 0;
  };
  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string line = raw.substr(0, raw.find('#'));
    std::size_t p = line.find_first_not_of(" \t");
    if (p == std::string::npos) {
      // comment-only lines are skipped; only blank lines end a matrix
      if (raw.find('#') != std::string::npos) continue;
      close_block(lineno);
      continue;
    }
    const std::size_t e = line.find_last_not_of(" \t");
    std::string name;
    if (rows == 0 && is_label(line.substr(p, e - p + 1), name)) {
      if (!pending.empty()) throw ParseError(lineno, static_cast<int>(p) + 1, "two labels for one matrix");
      pending = name;
      any_label = true;
      continue;
    }
    if (rows == 3) throw ParseError(lineno, static_cast<int>(p) + 1, "matrix has more than 3 rows; separate matrices by a blank line");
    if (rows == 0) block_line = lineno;
    int col = 0;
    while (p < line.size()) {
      p = line.find_first_not_of(" \t", p);
      if (p == std::string::npos) break;
      std::size_t q = line.find_first_of(" \t", p);
      if (q == std::string::npos) q = line.size();
      const std::string tok = line.substr(p, q - p);
      if (col == 3) throw ParseError(lineno, static_cast<int>(p) + 1, "more than 3 numbers in a row");
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v))
        throw ParseError(lineno, static_cast<int>(p) + 1, "expected a finite number, got '" + tok + "'");
      cur[static_cast<std::size_t>(3 * rows + col)] = v;
      ++col;
      p = q;
    }
    if (col != 3) throw ParseError(lineno, static_cast<int>(line.size()) + 1, "expected 3 numbers, got " + std::to_string(col));
    ++rows;
  }
  close_block(lineno + 1);
  if (!pending.empty()) throw ParseError(lineno, 1, "label '" + pending + "' is not followed by a matrix");
  if (out.mats.size() != 3 && out.mats.size() != 4)
    throw WrongCount("expected 3 or 4 matrices, found " + std::to_string(out.mats.size()));
  if (any_label) out.labels = std::move(labels);
  return out;
}

std::string write_algebra(const AlgebraFile& a) {
  if (!a.labels.empty() && a.labels.size() != a.mats.size())
    throw std::invalid_argument("one label per matrix is required");
  std::string s;
  for (std::size_t m = 0; m < a.mats.size(); ++m) {
    if (m) s += '\n';
    if (!a.labels.empty() && !a.labels[m].empty()) s += a.labels[m] + ":\n";
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (j) s += ' ';
        s += fmt17(a.mats[m](i, j));
      }
      s += '\n';
    }
  }
  return s;
}

// ---------------------------------------------------------------- binary helpers

namespace {

constexpr std::uint64_t kMaxSamples = std::uint64_t(1) << 34;

class Writer {
 public:
  void magic(const char* m) { out_.insert(out_.end(), m, m + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(double v) {
    if (std::abs(v) > std::numeric_limits<float>::max()) throw std::range_error("value exceeds the float32 range");
    u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void grid(const Grid3& g) {
    for (int a = 0; a < 3; ++a) u32(static_cast<std::uint32_t>(g.n[a]));
    for (int a = 0; a < 3; ++a) f64(g.spacing[a]);
    for (int a = 0; a < 3; ++a) f64(g.origin[a]);
  }
  Bytes take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(const Bytes& b) : b_(b) {}
  void magic(const char* m) {
    if (b_.size() < 4 || std::memcmp(b_.data(), m, 4) != 0)
      throw MagicMismatch(std::string("not a ") + m + " file (bad magic)");
    pos_ = 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  Grid3 grid() {
    Grid3 g;
    std::uint64_t total = 1;
    for (int a = 0; a < 3; ++a) {
      const std::uint32_t n = u32();
      if (n < 2) throw FormatError("grid dimension below 2");
      if (n > std::uint32_t(std::numeric_limits<int>::max())) throw DimensionOverflow("grid dimension too large");
      total *= n;
      if (total > kMaxSamples) throw DimensionOverflow("grid has more than 2^34 samples");
      g.n[a] = static_cast<int>(n);
    }
    for (int a = 0; a < 3; ++a) g.spacing[a] = f64();
    for (int a = 0; a < 3; ++a) g.origin[a] = f64();
    for (int a = 0; a < 3; ++a)
      if (!(g.spacing[a] > 0) || !std::isfinite(g.spacing[a]) || !std::isfinite(g.origin[a]))
        throw FormatError("grid spacing must be positive and finite");
    return g;
  }
  std::size_t remaining() const { return b_.size() - pos_; }
  void need(std::uint64_t n) const {
    if (n > remaining()) throw Truncated("payload ends early");
  }

 private:
  const Bytes& b_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes encode_volume(const Volume& v) {
  v.validate();
  Writer w;
  w.reserve(4 + 12 + 48 + 4 * v.samples.size());
  w.magic("V3D1");
  w.grid(v.grid);
  for (double s : v.samples) w.f32(s);
  return w.take();
}

Volume decode_volume(const Bytes& b) {
  Reader r(b);
  r.magic("V3D1");
  const Grid3 g = r.grid();
  if (r.remaining() != 4 * g.size())
    throw Truncated("header announces " + std::to_string(g.size()) + " samples, payload holds " +
                    std::to_string(r.remaining()) + " bytes");
  Volume v(g);
  for (double& s : v.samples) s = r.f32();
  return v;
}

Bytes encode_coefficients(const Coefficients& c) {
  const std::size_t N = c.grid.size();
  if (c.data.size() != c.nodes.size()) throw std::invalid_argument("one coefficient array per node is required");
  Writer w;
  w.magic("C3W1");
  w.str(family_tag(c.family));
  w.u32(static_cast<std::uint32_t>(c.params.values.size()));
  for (const auto& [k, v] : c.params.values) {
    w.str(k);
    w.f64(v);
  }
  w.grid(c.grid);
  w.str(c.wavelet_id);
  w.u32(static_cast<std::uint32_t>(c.nodes.size()));
  for (std::size_t i = 0; i < c.nodes.size(); ++i) {
    const auto& n = c.nodes[i];
    w.u32(static_cast<std::uint32_t>(n.point.x.size() + 1));
    for (double x : n.point.x) w.f64(x);
    w.f64(static_cast<double>(n.ext));
    w.f64(n.weight);
    if (c.data[i].size() != N) throw std::invalid_argument("coefficient array has the wrong size");
    for (const cplx& v : c.data[i]) {
      w.f32(v.real());
      w.f32(v.imag());
    }
  }
  return w.take();
}

Coefficients decode_coefficients(const Bytes& b) {
  Reader r(b);
  r.magic("C3W1");
  Coefficients c;
  try {
    c.family = family_from_tag(r.str());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const std::uint32_t np = r.u32();
  for (std::uint32_t i = 0; i < np; ++i) {
    std::string k = r.str();
    c.params.values[k] = r.f64();
  }
  c.grid = r.grid();
  c.wavelet_id = r.str();
  const std::uint32_t nn = r.u32();
  const std::size_t N = c.grid.size();
  std::unique_ptr<FamilySpec> fam;
  try {
    fam = std::make_unique<FamilySpec>(c.family, c.params);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid family parameters: ") + e.what());
  }
  const auto ext = fam->finite_extension();
  for (std::uint32_t i = 0; i < nn; ++i) {
    const std::uint32_t nc = r.u32();
    if (nc != fam->dim() + 1) throw FormatError("node coordinate count does not match the family");
    DilationNode node;
    for (std::uint32_t a = 0; a + 1 < nc; ++a) node.point.x.push_back(r.f64());
    const double e = r.f64();
    if (!(e >= 0) || e != std::floor(e) || e >= static_cast<double>(ext.size()))
      throw FormatError("bad finite-extension index");
    node.ext = static_cast<int>(e);
    node.weight = r.f64();
    node.h = ext[static_cast<std::size_t>(node.ext)] * fam->chart_to_matrix(node.point);
    r.need(std::uint64_t(8) * N);
    std::vector<cplx> d(N);
    for (auto& v : d) {
      const double re = r.f32();
      v = {re, r.f32()};
    }
    c.nodes.push_back(std::move(node));
    c.data.push_back(std::move(d));
  }
  if (r.remaining() != 0) throw Truncated("trailing bytes after the last node");
  return c;
}

Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& p, const Bytes& b) {
  std::random_device rd;
  std::filesystem::path tmp = p;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, p);
}

void write_file_atomic(const std::filesystem::path& p, const std::string& s) {
  write_file_atomic(p, Bytes(s.begin(), s.end()));
}

// ---------------------------------------------------------------- wavelet side-car

std::string write_wavelet_meta(const WaveletMeta& m) {
  Json j;
  j["generator"] = m.generator;
  j["pattern"] = to_string(m.pattern);
  j["r"] = m.pattern.r;
  j["generator_id"] = m.generator_id;
  if (m.generator == "bump-deriv") {
    j["bump"] = {{"radius", {m.bump.radius[0], m.bump.radius[1], m.bump.radius[2]}},
                 {"center", {m.bump.center[0], m.bump.center[1], m.bump.center[2]}},
                 {"smoothness", m.bump.smoothness}};
  } else if (m.generator == "shell") {
    j["shell"] = {{"lo", m.lo}, {"hi", m.hi}, {"smoothness", m.smoothness}};
  }
  return dump_json(j);
}

WaveletMeta parse_wavelet_meta(const std::string& text) {
  const Json j = Json::parse(text);
  WaveletMeta m;
  m.generator = j.at("generator").get<std::string>();
  m.pattern = parse_pattern(j.at("pattern").get<std::string>());
  m.generator_id = j.at("generator_id").get<std::string>();
  if (m.generator == "bump-deriv") {
    const Json& b = j.at("bump");
    for (int a = 0; a < 3; ++a) {
      m.bump.radius[a] = b.at("radius").at(static_cast<std::size_t>(a)).get<double>();
      m.bump.center[a] = b.at("center").at(static_cast<std::size_t>(a)).get<double>();
    }
    m.bump.smoothness = b.at("smoothness").get<double>();
  } else if (m.generator == "shell") {
    const Json& s = j.at("shell");
    m.lo = s.at("lo").get<double>();
    m.hi = s.at("hi").get<double>();
    m.smoothness = s.at("smoothness").get<double>();
  } else if (m.generator != "samples") {
    throw std::invalid_argument("unknown wavelet generator '" + m.generator + "'");
  }
  return m;
}

Wavelet rebuild_wavelet(const WaveletMeta& m, const Volume& samples) {
  if (m.generator == "bump-deriv") return make_vanishing_wavelet(m.pattern, samples.grid, m.bump);
  if (m.generator == "shell") return make_shell_wavelet(samples.grid, m.lo, m.hi, m.smoothness);
  return wavelet_from_samples(samples.grid, samples.samples, m.pattern, m.generator_id);
}

// ---------------------------------------------------------------- reports

namespace {

void dump(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(2 * (indent + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump(it.value(), indent + 1, out);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(j[i], indent + 1, out);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      std::string s = fmt17(v);
      // keep the float type visible so re-parsing yields a float again
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, 0, out);
  out += '\n';
  return out;
}

std::string Report::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dump_json(inputs)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json Report::to_json() const {
  return {{"command", command}, {"inputs", inputs}, {"inputs_digest", digest()}, {"results", results}, {"version", version}};
}

Report Report::from_json(const Json& j) {
  Report r;
  r.command = j.at("command").get<std::string>();
  r.inputs = j.at("inputs");
  r.results = j.at("results");
  r.version = j.at("version").get<std::string>();
  return r;
}

std::string write_report(const Report& r) { return dump_json(r.to_json()); }

Report parse_report(const std::string& text) { return Report::from_json(Json::parse(text)); }

}  // namespace adm3::io
