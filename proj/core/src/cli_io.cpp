#include "smx/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <system_error>

#include "smx/numfmt.hpp"

#ifndef SMX_VERSION
#define SMX_VERSION "0.0.0"
#endif

namespace smx {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::string key;
  std::string value;
  int line;
};

[[noreturn]] void fail(const std::string& key, int line, const std::string& msg) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << "'" << key << "': " << msg;
  throw ConfigError(os.str(), key, line);
}

double to_double(const Field& f) {
  double v = 0.0;
  const char* b = f.value.data();
  const char* e = b + f.value.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
    fail(f.key, f.line, "expected a finite number, got '" + f.value + "'");
  }
  return v;
}

// Accepts plain integers and exact integral doubles such as 1e5.
std::uint64_t to_u64(const Field& f) {
  std::uint64_t v = 0;
  const char* b = f.value.data();
  const char* e = b + f.value.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec == std::errc() && res.ptr == e) return v;
  double d = 0.0;
  const auto rd = std::from_chars(b, e, d);
  if (rd.ec == std::errc() && rd.ptr == e && d >= 0.0 && d < 1.8e19 && std::floor(d) == d) {
    return static_cast<std::uint64_t>(d);
  }
  fail(f.key, f.line, "expected a non-negative integer, got '" + f.value + "'");
}

int to_int(const Field& f) {
  const std::uint64_t v = to_u64(f);
  if (v > 1000000000ull) fail(f.key, f.line, "value too large");
  return static_cast<int>(v);
}

bool to_bool(const Field& f) {
  if (f.value == "true" || f.value == "1" || f.value == "yes") return true;
  if (f.value == "false" || f.value == "0" || f.value == "no") return false;
  fail(f.key, f.line, "expected true or false, got '" + f.value + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (!s.empty()) {
    const auto c = s.find(',');
    out.push_back(trim(s.substr(0, c)));
    if (c == std::string_view::npos) break;
    s.remove_prefix(c + 1);
  }
  return out;
}

template <typename T, typename Conv>
std::vector<T> to_list(const Field& f, Conv conv) {
  std::vector<T> out;
  for (std::string_view item : split_list(f.value)) {
    if (item.empty()) fail(f.key, f.line, "empty list element");
    out.push_back(conv(Field{f.key, std::string(item), f.line}));
  }
  if (out.empty()) fail(f.key, f.line, "empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[k]);
    } else {
      s += std::to_string(v[k]);
    }
  }
  return s;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const char* software_version() { return SMX_VERSION; }

ExperimentConfig parse_config(std::string_view text, std::set<std::string>* seen) {
  std::map<std::string, Field> fields;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(std::string(line), line_no, "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(key, line_no, "missing key");
    if (value.empty()) fail(key, line_no, "missing value");
    if (fields.count(key)) fail(key, line_no, "duplicate key");
    fields.emplace(key, Field{key, value, line_no});
  }

  ExperimentConfig c;
  for (const auto& [key, f] : fields) {
    if (key == "scheme") {
      try {
        c.scheme = parse_scheme(f.value);
      } catch (const std::invalid_argument& e) {
        fail(key, f.line, e.what());
      }
    } else if (key == "nx") {
      c.grid.nx = to_int(f);
    } else if (key == "ny") {
      c.grid.ny = to_int(f);
    } else if (key == "nz") {
      c.grid.nz = to_int(f);
    } else if (key == "lx") {
      c.grid.lx = to_double(f);
    } else if (key == "ly") {
      c.grid.ly = to_double(f);
    } else if (key == "lz") {
      c.grid.lz = to_double(f);
    } else if (key == "dt") {
      c.dt = to_double(f);
    } else if (key == "t_end") {
      c.t_end = to_double(f);
    } else if (key == "lambda1") {
      c.lambda1 = to_double(f);
    } else if (key == "lambda2") {
      c.lambda2 = to_double(f);
    } else if (key == "noise_mode") {
      if (f.value == "space_time") {
        c.noise.mode = NoiseMode::space_time;
      } else if (f.value == "time_only") {
        c.noise.mode = NoiseMode::time_only;
      } else {
        fail(key, f.line, "expected space_time or time_only, got '" + f.value + "'");
      }
    } else if (key == "trunc_m") {
      c.noise.trunc_m = to_int(f);
    } else if (key == "trunc_l") {
      c.noise.trunc_l = to_int(f);
    } else if (key == "paths") {
      c.paths = to_u64(f);
    } else if (key == "seed") {
      c.seed = to_u64(f);
    } else if (key == "solver_tol") {
      c.solver_tol = to_double(f);
    } else if (key == "mode") {
      if (f.value == "tm") {
        c.mode = FieldMode::tm;
      } else if (f.value == "full3d") {
        c.mode = FieldMode::full3d;
      } else {
        fail(key, f.line, "expected tm or full3d, got '" + f.value + "'");
      }
    } else if (key == "out_dir") {
      c.out_dir = f.value;
    } else if (key == "workers") {
      c.workers = static_cast<unsigned>(to_int(f));
    } else if (key == "snapshot_every") {
      c.snapshot_every = to_u64(f);
    } else if (key == "record_msymp") {
      c.record_msymp = to_bool(f);
    } else if (key == "dt_list") {
      c.dt_list = to_list<double>(f, to_double);
    } else if (key == "dt_ref") {
      c.dt_ref = to_double(f);
    } else if (key == "p_list") {
      c.p_list = to_list<std::uint64_t>(f, to_u64);
    } else {
      fail(key, f.line, "unknown key");
    }
    if (seen) seen->insert(key);
  }
  c.noise.lx = c.grid.lx;
  c.noise.ly = c.grid.ly;

  // Invariants, reported against the key most responsible.
  auto line_of = [&](const char* k) { return fields.count(k) ? fields.at(k).line : 0; };
  if (c.paths < 1) fail("paths", line_of("paths"), "invariant P >= 1 violated");
  for (const char* k : {"nx", "ny", "nz"}) {
    const int v = std::string(k) == "nx" ? c.grid.nx : std::string(k) == "ny" ? c.grid.ny : c.grid.nz;
    if (v < 1) fail(k, line_of(k), "node counts must be >= 1");
  }
  for (const char* k : {"lx", "ly", "lz"}) {
    const double v = std::string(k) == "lx" ? c.grid.lx : std::string(k) == "ly" ? c.grid.ly : c.grid.lz;
    if (!(v > 0.0)) fail(k, line_of(k), "lengths must be > 0");
  }
  if (c.noise.trunc_m < 1) fail("trunc_m", line_of("trunc_m"), "must be >= 1");
  if (c.noise.trunc_l < 1) fail("trunc_l", line_of("trunc_l"), "must be >= 1");
  if (!(c.solver_tol > 0.0)) fail("solver_tol", line_of("solver_tol"), "must be > 0");
  if (!(c.dt_ref > 0.0)) fail("dt_ref", line_of("dt_ref"), "must be > 0");
  try {
    (void)c.steps();
  } catch (const std::invalid_argument& e) {
    fail(fields.count("dt") ? "dt" : "t_end", std::max(line_of("dt"), line_of("t_end")), e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file, std::set<std::string>* seen) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'", "", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seen);
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "scheme = " << scheme_name(c.scheme) << "\n"
     << "mode = " << (c.mode == FieldMode::tm ? "tm" : "full3d") << "\n"
     << "nx = " << c.grid.nx << "\n"
     << "ny = " << c.grid.ny << "\n"
     << "nz = " << c.grid.nz << "\n"
     << "lx = " << format_double(c.grid.lx) << "\n"
     << "ly = " << format_double(c.grid.ly) << "\n"
     << "lz = " << format_double(c.grid.lz) << "\n"
     << "dt = " << format_double(c.dt) << "\n"
     << "t_end = " << format_double(c.t_end) << "\n"
     << "lambda1 = " << format_double(c.lambda1) << "\n"
     << "lambda2 = " << format_double(c.lambda2) << "\n"
     << "noise_mode = " << (c.noise.mode == NoiseMode::time_only ? "time_only" : "space_time")
     << "\n"
     << "trunc_m = " << c.noise.trunc_m << "\n"
     << "trunc_l = " << c.noise.trunc_l << "\n"
     << "paths = " << c.paths << "\n"
     << "seed = " << c.seed << "\n"
     << "solver_tol = " << format_double(c.solver_tol) << "\n"
     << "out_dir = " << c.out_dir << "\n"
     << "workers = " << c.workers << "\n"
     << "snapshot_every = " << c.snapshot_every << "\n"
     << "record_msymp = " << (c.record_msymp ? "true" : "false") << "\n"
     << "dt_ref = " << format_double(c.dt_ref) << "\n";
  if (!c.dt_list.empty()) os << "dt_list = " << join(c.dt_list) << "\n";
  if (!c.p_list.empty()) os << "p_list = " << join(c.p_list) << "\n";
  return os.str();
}

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "# smx run manifest\n"
     << "# csv_schema_version: " << kCsvSchemaVersion << "\n"
     << "# software_version: " << software_version() << "\n"
     << "# subcommand: " << subcommand << "\n"
     << "# wall_clock_utc: " << wall_clock_utc << "\n"
     << "# elapsed_seconds: " << format_double(elapsed_seconds) << "\n"
     << "# files:";
  for (const std::string& f : files) os << " " << f;
  os << "\n" << config_to_text(config);
  return os.str();
}

// ---------------------------------------------------------------------- CSV -

void write_energy_csv(std::ostream& out, const EnsembleStats& s) {
  out << "step,time,mean_phi,var_phi,min_phi,max_phi,predicted_line\n";
  for (const EnergyRow& r : s.energy) {
    out << r.step << ',' << format_double(r.time) << ',' << format_double(r.mean) << ','
        << format_double(r.var) << ',' << format_double(r.min) << ',' << format_double(r.max) << ','
        << format_double(s.predicted_energy(r.time)) << '\n';
  }
}

void write_divergence_csv(std::ostream& out, const EnsembleStats& s) {
  out << "step,time,err_div_H,err_div_E\n";
  for (const DivergenceRow& r : s.divergence) {
    out << r.step << ',' << format_double(r.time) << ',' << format_double(r.err_div_h) << ','
        << format_double(r.err_div_e) << '\n';
  }
}

void write_msymp_csv(std::ostream& out, const std::vector<MsympRow>& rows) {
  out << "step,max_residual\n";
  for (const MsympRow& r : rows) out << r.step << ',' << format_double(r.max_residual) << '\n';
}

void write_msconv_csv(std::ostream& out, const ConvergenceTable& t) {
  out << "dt,ms_error,local_order\n";
  for (const ConvergenceRow& r : t.rows) {
    out << format_double(r.dt) << ',' << format_double(r.ms_error) << ','
        << (std::isnan(r.local_order) ? std::string("nan") : format_double(r.local_order)) << '\n';
  }
}

void write_pathsweep_csv(std::ostream& out, const std::vector<PathSweepRow>& rows) {
  out << "P,err_div\n";
  for (const PathSweepRow& r : rows) out << r.paths << ',' << format_double(r.err_div) << '\n';
}

void write_noise_info_csv(std::ostream& out, const SpectralBasis& b) {
  out << "m,l,eta,a\n";
  for (int m = 1; m <= b.trunc_m; ++m)
    for (int l = 1; l <= b.trunc_l; ++l)
      out << m << ',' << l << ',' << format_double(b.eta(m, l)) << ','
          << format_double(coefficient_magnitude(m, l)) << '\n';
}

// ---------------------------------------------------------------------- SVG -

namespace {

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

std::string short_num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

void write_svg_chart(std::ostream& out, const ChartSpec& spec,
                     const std::vector<ChartSeries>& series) {
  constexpr double W = 640, H = 420, L = 80, R = 150, T = 40, B = 60;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_x || x > 0) && (!spec.log_y || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const ChartSeries& s : series)
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!usable(s.x[k], s.y[k])) continue;
      x0 = std::min(x0, tx(s.x[k]));
      x1 = std::max(x1, tx(s.x[k]));
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) {
    const double pad = std::max(std::abs(y0) * 0.05, 0.5);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  static constexpr const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(spec.title) << "</text>\n"
      << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double vx = spec.log_x ? std::pow(10.0, fx) : fx;
    const double vy = spec.log_y ? std::pow(10.0, fy) : fy;
    out << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
        << short_num(vx) << "</text>\n"
        << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">"
        << short_num(vy) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << xml_escape(spec.x_label) << "</text>\n"
      << "<text transform=\"translate(18," << (T + H - B) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(spec.y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 5];
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    const ChartSeries& cs = series[s];
    for (std::size_t k = 0; k < std::min(cs.x.size(), cs.y.size()); ++k)
      if (usable(cs.x[k], cs.y[k])) out << px(cs.x[k]) << ',' << py(cs.y[k]) << ' ';
    out << "\"/>\n"
        << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 + 18 * s << "\" fill=\"" << col
        << "\">" << xml_escape(cs.name) << "</text>\n";
  }
  out << "</svg>\n";
}

// ----------------------------------------------------------------- dispatch -

namespace {

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  template <typename Fn>
  void write(const std::string& name, Fn&& fn) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    fn(f);
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

std::vector<double> column(const std::vector<EnergyRow>& rows, double EnergyRow::*m) {
  std::vector<double> v;
  for (const EnergyRow& r : rows) v.push_back(r.*m);
  return v;
}

int run_subcommand(const std::string& sub, ExperimentConfig& cfg,
                   const std::set<std::string>& seen, bool svg, OutputDir& dir, std::ostream& out,
                   std::ostream& err) {
  if (sub == "noise-info") {
    dir.write("noise_info.csv", [&](std::ostream& f) { write_noise_info_csv(f, cfg.noise); });
    const QTrace tr = trace_q(cfg.noise);
    out << "Tr(Q) over " << cfg.noise.trunc_m << "x" << cfg.noise.trunc_l
        << " modes: " << format_double(tr.value) << "\n";
    if (cfg.noise.mode == NoiseMode::space_time) {
      const DiscreteTrace d = discrete_trace(cfg.noise, cfg.grid);
      out << "grid quadrature vbar=" << format_double(d.vbar) << " vhat=" << format_double(d.vhat)
          << "\n";
    }
    return 0;
  }

  if (sub == "symplectic") {
    if (!seen.count("nx") && !seen.count("ny") && !seen.count("nz")) {
      // Small default grid; the box scheme needs odd counts.
      cfg.grid.nx = cfg.scheme == SchemeId::method1 ? 9 : 8;
      cfg.grid.ny = cfg.scheme == SchemeId::method1 ? 7 : 6;
    }
    if (!seen.count("dt") && !seen.count("t_end")) {
      cfg.dt = 0.01;
      cfg.t_end = 0.2;
    }
    const std::vector<MsympRow> rows = msymp_check(cfg, cfg.steps());
    dir.write("msymp.csv", [&](std::ostream& f) { write_msymp_csv(f, rows); });
    double worst = 0.0;
    for (const MsympRow& r : rows) worst = std::max(worst, r.max_residual);
    out << scheme_name(cfg.scheme) << " max relative 2-form residual over " << rows.size()
        << " steps: " << format_double(worst) << "\n";
    if (!(worst <= 1e-10)) {
      err << "smx: 2-form residual " << worst << " exceeds 1e-10\n";
      return 3;
    }
    return 0;
  }

  if (sub == "pathsweep") {
    if (cfg.p_list.empty()) cfg.p_list = {10, 100, 1000, 10000, 100000};
    const std::vector<PathSweepRow> rows = path_count_sweep(cfg, cfg.p_list);
    dir.write("pathsweep.csv", [&](std::ostream& f) { write_pathsweep_csv(f, rows); });
    std::vector<double> lp, le;
    for (const PathSweepRow& r : rows) {
      lp.push_back(std::log10(static_cast<double>(r.paths)));
      le.push_back(std::log10(r.err_div));
    }
    if (rows.size() >= 3) {
      out << "log-log slope of Err-Div vs P: " << format_double(fit_slope(lp, le).slope) << "\n";
    }
    if (svg) {
      std::vector<double> p, e;
      for (const PathSweepRow& r : rows) {
        p.push_back(static_cast<double>(r.paths));
        e.push_back(r.err_div);
      }
      dir.write("pathsweep.svg", [&](std::ostream& f) {
        write_svg_chart(f, {"Err-Div vs paths", "P", "Err-Div", true, true}, {{"Err-Div", p, e}});
      });
    }
    return 0;
  }

  if (sub == "msconv") {
    if (cfg.dt_list.empty()) cfg.dt_list = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    const ConvergenceTable t = msconv_study(cfg, cfg.dt_list, cfg.dt_ref, cfg.paths);
    dir.write("msconv.csv", [&](std::ostream& f) { write_msconv_csv(f, t); });
    out << scheme_name(cfg.scheme) << " mean-square order: " << format_double(t.order)
        << " (noise checksum gap " << format_double(t.max_noise_checksum_diff) << ")\n";
    if (svg) {
      std::vector<double> d, e;
      for (const ConvergenceRow& r : t.rows) {
        d.push_back(r.dt);
        e.push_back(r.ms_error);
      }
      dir.write("msconv.svg", [&](std::ostream& f) {
        write_svg_chart(f, {"mean-square error", "dt", "E|err|^2", true, true}, {{"ms error", d, e}});
      });
    }
    return 0;
  }

  if (sub == "simulate" || sub == "energy" || sub == "divergence") {
    if (sub == "simulate" && cfg.snapshot_every == 0) cfg.snapshot_every = cfg.steps();
    const EnsembleStats st = run_ensemble(cfg);
    for (const std::string& w : st.warnings) err << "smx: warning: " << w << "\n";
    if (sub != "divergence") {
      dir.write("energy.csv", [&](std::ostream& f) { write_energy_csv(f, st); });
    }
    if (sub != "energy") {
      dir.write("divergence.csv", [&](std::ostream& f) { write_divergence_csv(f, st); });
    }
    if (!st.msymp.empty()) dir.write("msymp.csv", [&](std::ostream& f) { write_msymp_csv(f, st.msymp); });
    for (const Snapshot& snap : st.snapshots) {
      dir.write("snapshot_" + std::to_string(snap.step) + ".csv",
                [&](std::ostream& f) { write_snapshot_csv(f, snap.state); });
    }
    out << scheme_name(cfg.scheme) << ", " << st.paths << " paths: mean energy slope "
        << format_double(st.mean_fit.slope) << " +/- " << format_double(st.slope_se)
        << " (predicted " << format_double(st.predicted_rate) << ")\n";
    if (!st.divergence.empty()) {
      double worst = 0.0;
      for (const DivergenceRow& r : st.divergence) worst = std::max(worst, r.err_div_h);
      out << "max Err-Div(H): " << format_double(worst) << "\n";
    }
    if (svg && sub != "divergence") {
      const std::vector<double> t = column(st.energy, &EnergyRow::time);
      std::vector<double> pred;
      for (double x : t) pred.push_back(st.predicted_energy(x));
      dir.write("energy.svg", [&](std::ostream& f) {
        write_svg_chart(f, {"averaged energy", "t", "E[Phi]", false, false},
                        {{"Monte-Carlo mean", t, column(st.energy, &EnergyRow::mean)},
                         {"predicted", t, pred}});
      });
    }
    if (svg && sub != "energy") {
      std::vector<double> t, e;
      for (const DivergenceRow& r : st.divergence) {
        t.push_back(r.time);
        e.push_back(r.err_div_h);
      }
      dir.write("divergence.svg", [&](std::ostream& f) {
        write_svg_chart(f, {"Err-Div(H)", "t", "Err-Div", false, false}, {{"Err-Div(H)", t, e}});
      });
    }
    return 0;
  }

  err << "smx: unknown subcommand '" << sub << "'\n";
  return 2;
}

}  // namespace

int dispatch(const CliOptions& options, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.subcommand = options.subcommand;
  manifest.wall_clock_utc = utc_now();
  std::set<std::string> seen;
  try {
    ExperimentConfig cfg =
        options.config_file ? load_config(*options.config_file, &seen) : ExperimentConfig{};
    if (options.seed) cfg.seed = *options.seed;
    if (options.out_dir) cfg.out_dir = *options.out_dir;
    if (options.paths) {
      if (*options.paths < 1) throw ConfigError("--paths: invariant P >= 1 violated", "paths", 0);
      cfg.paths = *options.paths;
    }
    OutputDir dir(cfg.out_dir);
    const int rc = run_subcommand(options.subcommand, cfg, seen, options.svg, dir, out, err);
    manifest.config = cfg;
    manifest.files = dir.files();
    manifest.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rc != 2) {
      std::ofstream mf(std::filesystem::path(cfg.out_dir) / "manifest.txt", std::ios::binary);
      mf << manifest.to_text();
    }
    return rc;
  } catch (const ConfigError& e) {
    err << "smx: config error: " << e.what() << "\n";
    return 2;
  } catch (const PlanningError& e) {
    err << "smx: planning error: " << e.what() << "\n";
    return 1;
  } catch (const PathError& e) {
    err << "smx: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "smx: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace smx
