#include "forge/evaluation/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "forge/common/errors.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/io.hpp"
#include "json.hpp"

#ifndef FORGE_VERSION
#define FORGE_VERSION "0.1.0"
#endif

namespace forge::evaluation {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string version_string() { return FORGE_VERSION; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---- JSON ---------------------------------------------------------------------------

ordered_json nullable(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }
double from_nullable(const ordered_json& j) { return j.is_null() ? kNaN : j.get<double>(); }

ordered_json triple_json(const Triple& t) { return ordered_json::array({t.min, t.mean, t.max}); }
Triple triple_from(const ordered_json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("results: a min/mean/max triple must have three entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ordered_json error_report_json(const ErrorReport& e) {
  ordered_json folds = ordered_json::array();
  for (const auto& f : e.folds) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : f.rows) {
      rows.push_back({{"row", r.row},
                      {"candidates", r.candidates},
                      {"relative", triple_json(r.relative)},
                      {"absolute", r.absolute ? triple_json(*r.absolute) : ordered_json(nullptr)}});
    }
    folds.push_back({{"fold", f.fold}, {"rows", rows}});
  }
  return {{"method", e.method}, {"mask_ratio", e.mask_ratio}, {"folds", folds}};
}

ErrorReport error_report_from(const ordered_json& j) {
  ErrorReport e;
  e.method = j.at("method").get<std::string>();
  e.mask_ratio = j.at("mask_ratio").get<double>();
  for (const auto& fj : j.at("folds")) {
    FoldResult f;
    f.fold = fj.at("fold").get<int>();
    for (const auto& rj : fj.at("rows")) {
      RowResult r;
      r.row = rj.at("row").get<std::size_t>();
      r.candidates = rj.at("candidates").get<std::size_t>();
      r.relative = triple_from(rj.at("relative"));
      if (!rj.at("absolute").is_null()) r.absolute = triple_from(rj.at("absolute"));
      f.rows.push_back(r);
    }
    e.folds.push_back(std::move(f));
  }
  return e;
}

ordered_json doubles_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(nullable(x));
  return a;
}
std::vector<double> doubles_from(const ordered_json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(from_nullable(x));
  return v;
}

}  // namespace

void ReportInputs::merge(const ReportInputs& o) {
  full.insert(full.end(), o.full.begin(), o.full.end());
  partial.insert(partial.end(), o.partial.begin(), o.partial.end());
  if (!closed_loop && o.closed_loop) closed_loop = o.closed_loop;
  traces.insert(traces.end(), o.traces.begin(), o.traces.end());
  if (!predict_error && o.predict_error) predict_error = o.predict_error;
  sweep.insert(sweep.end(), o.sweep.begin(), o.sweep.end());
  if (!pca && o.pca) pca = o.pca;
  for (const auto& [k, v] : o.seeds) {
    auto [it, fresh] = seeds.emplace(k, v);
    if (!fresh && it->second != v) throw ConfigError("results disagree on seed '" + k + "'");
  }
  for (const auto& [k, v] : o.config_hashes) {
    auto [it, fresh] = config_hashes.emplace(k, v);
    if (!fresh && it->second != v) throw ConfigError("results disagree on config hash '" + k + "'");
  }
}

std::string results_to_json(const ReportInputs& r) {
  ordered_json j;
  j["format"] = "forge-results/1";
  j["full"] = ordered_json::array();
  for (const auto& e : r.full) j["full"].push_back(error_report_json(e));
  j["partial"] = ordered_json::array();
  for (const auto& e : r.partial) j["partial"].push_back(error_report_json(e));
  if (r.closed_loop) {
    const auto& c = *r.closed_loop;
    j["closed_loop"] = {{"labels", c.labels},
                        {"relative", doubles_json(c.relative)},
                        {"absolute", doubles_json(c.absolute)},
                        {"relative_count", c.relative_count},
                        {"absolute_count", c.absolute_count},
                        {"targets", c.targets}};
  } else {
    j["closed_loop"] = nullptr;
  }
  j["traces"] = ordered_json::array();
  for (const auto& t : r.traces) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : t.points) pts.push_back(ordered_json::array({p.calls, p.best_error}));
    j["traces"].push_back({{"method", to_string(t.method)},
                           {"budget", t.budget},
                           {"best", std::vector<double>(t.best.begin(), t.best.end())},
                           {"points", pts}});
  }
  j["predict_error"] = r.predict_error ? ordered_json(*r.predict_error) : ordered_json(nullptr);
  j["sweep"] = ordered_json::array();
  for (const auto& s : r.sweep) j["sweep"].push_back({{"ratio", s.ratio}, {"relative_min", s.relative_min}, {"relative_mean", s.relative_mean}});
  if (r.pca) {
    ordered_json pts = ordered_json::array();
    for (const auto& p : r.pca->points) pts.push_back({{"set", p.set}, {"pc1", p.pc1}, {"pc2", p.pc2}});
    j["pca"] = {{"explained", r.pca->explained}, {"points", pts}};
  } else {
    j["pca"] = nullptr;
  }
  j["seeds"] = r.seeds;
  j["config_hashes"] = r.config_hashes;
  return j.dump(2) + "\n";
}

ReportInputs results_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("results file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "forge-results/1") {
    throw VersionError("results file lacks format \"forge-results/1\"");
  }
  ReportInputs r;
  try {
    for (const auto& e : j.at("full")) r.full.push_back(error_report_from(e));
    for (const auto& e : j.at("partial")) r.partial.push_back(error_report_from(e));
    if (!j.at("closed_loop").is_null()) {
      const auto& c = j["closed_loop"];
      ClosedLoopReport cl;
      cl.labels = c.at("labels").get<std::vector<std::string>>();
      cl.relative = doubles_from(c.at("relative"));
      cl.absolute = doubles_from(c.at("absolute"));
      cl.relative_count = c.at("relative_count").get<std::vector<std::size_t>>();
      cl.absolute_count = c.at("absolute_count").get<std::vector<std::size_t>>();
      cl.targets = c.at("targets").get<std::size_t>();
      r.closed_loop = cl;
    }
    for (const auto& tj : j.at("traces")) {
      SearchTrace t;
      t.method = search_method_from_string(tj.at("method").get<std::string>());
      t.budget = tj.at("budget").get<std::size_t>();
      const auto best = tj.at("best").get<std::vector<double>>();
      if (best.size() != t.best.size()) throw DimensionError("results: trace composition has the wrong length");
      std::copy(best.begin(), best.end(), t.best.begin());
      for (const auto& p : tj.at("points")) t.points.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
      r.traces.push_back(std::move(t));
    }
    if (!j.at("predict_error").is_null()) r.predict_error = j["predict_error"].get<double>();
    for (const auto& s : j.at("sweep")) {
      r.sweep.push_back({s.at("ratio").get<double>(), s.at("relative_min").get<double>(), s.at("relative_mean").get<double>()});
    }
    if (!j.at("pca").is_null()) {
      PcaResult p;
      p.explained = j["pca"].at("explained").get<std::vector<double>>();
      for (const auto& q : j["pca"].at("points")) {
        p.points.push_back({q.at("set").get<std::string>(), q.at("pc1").get<double>(), q.at("pc2").get<double>()});
      }
      r.pca = p;
    }
    r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    r.config_hashes = j.at("config_hashes").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("results file is malformed: ") + e.what());
  }
  return r;
}

// ---- SVG ----------------------------------------------------------------------------

namespace {

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool line = true;
};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string plot_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
    << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  // axes
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    o << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << H - B << "\" x2=\"" << num(px(xv)) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << num(std::round(xv * 1e4) / 1e4)
      << "</text>\n";
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << L << "\" y2=\"" << num(py(yv))
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << L - 8 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(std::round(yv * 1e4) / 1e4)
      << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xml_escape(xlabel)
    << "</text>\n";
  o << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (T + H - B) / 2
    << ")\">" << xml_escape(ylabel) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    if (s.line && s.x.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (std::isfinite(s.y[i])) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
      }
      o << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << color
          << "\" fill-opacity=\"0.7\"/>\n";
      }
    }
    // legend
    const double ly = T + 10 + 18 * static_cast<double>(si);
    o << "<rect x=\"" << W - R + 15 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    o << "<text x=\"" << W - R + 32 << "\" y=\"" << ly + 2 << "\">" << xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string table_a(const ReportInputs& r) {
  std::ostringstream o;
  o << "method,relative_mean,relative_std,absolute_mean,absolute_std\n";
  for (const auto& e : r.full) {
    const auto rel = e.relative_min();
    const auto abs = e.absolute_min();
    o << e.method << ',' << num(rel.mean) << ',' << num(rel.std) << ',' << num(abs.mean) << ',' << num(abs.std) << '\n';
  }
  return o.str();
}

std::string table_b(const ReportInputs& r) {
  std::ostringstream o;
  o << "method,mask_ratio,relative_min_mean,relative_min_std,relative_mean_mean,relative_mean_std,relative_max_mean,"
       "relative_max_std,absolute_min_mean,absolute_min_std,absolute_mean_mean,absolute_mean_std,absolute_max_mean,"
       "absolute_max_std\n";
  for (const auto& e : r.partial) {
    o << e.method << ',' << num(e.mask_ratio);
    for (const Spread& s : {e.relative_min(), e.relative_mean(), e.relative_max(), e.absolute_min(), e.absolute_mean(),
                            e.absolute_max()}) {
      o << ',' << num(s.mean) << ',' << num(s.std);
    }
    o << '\n';
  }
  return o.str();
}

std::string phase_table(const ReportInputs& r) {
  std::ostringstream o;
  o << "phase,relative,absolute,relative_targets,absolute_targets\n";
  if (!r.closed_loop) return o.str();
  const auto& c = *r.closed_loop;
  for (std::size_t p = 0; p < c.labels.size(); ++p) {
    o << c.labels[p] << ',' << num(c.relative[p]) << ',' << num(c.absolute[p]) << ',' << c.relative_count[p] << ','
      << c.absolute_count[p] << '\n';
  }
  o << "average," << num(c.average_relative()) << ',' << num(c.average_absolute()) << ',' << c.targets << ',' << c.targets
    << '\n';
  return o.str();
}

std::string trace_table(const ReportInputs& r) {
  std::ostringstream o;
  o << "method,calls,best_error\n";
  if (r.predict_error) o << "predict,0," << num(*r.predict_error) << '\n';
  for (const auto& t : r.traces) {
    for (const auto& p : t.points) o << to_string(t.method) << ',' << p.calls << ',' << num(p.best_error) << '\n';
  }
  return o.str();
}

std::string sweep_table(const ReportInputs& r) {
  std::ostringstream o;
  o << "ratio,relative_min,relative_mean\n";
  for (const auto& s : r.sweep) o << num(s.ratio) << ',' << num(s.relative_min) << ',' << num(s.relative_mean) << '\n';
  return o.str();
}

std::string pca_table(const ReportInputs& r) {
  std::ostringstream o;
  o << "set,pc1,pc2\n";
  if (r.pca) {
    for (const auto& p : r.pca->points) o << p.set << ',' << num(p.pc1) << ',' << num(p.pc2) << '\n';
  }
  return o.str();
}

}  // namespace

std::vector<fs::path> emit_report(const ReportInputs& r, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());

  std::vector<std::pair<std::string, std::string>> files = {
      {"tableA.csv", table_a(r)},        {"tableB.csv", table_b(r)},   {"phase_errors.csv", phase_table(r)},
      {"search_trace.csv", trace_table(r)}, {"sweep.csv", sweep_table(r)}, {"pca.csv", pca_table(r)},
  };

  if (!r.sweep.empty()) {
    Series min{"min relative error", {}, {}}, mean{"mean relative error", {}, {}};
    for (const auto& s : r.sweep) {
      min.x.push_back(s.ratio);
      min.y.push_back(s.relative_min);
      mean.x.push_back(s.ratio);
      mean.y.push_back(s.relative_mean);
    }
    files.emplace_back("sweep.svg", plot_svg("Error versus missing ratio", "missing ratio", "relative error", {min, mean}));
  }
  if (!r.traces.empty() || r.predict_error) {
    std::vector<Series> ss;
    for (const auto& t : r.traces) {
      Series s{to_string(t.method), {}, {}};
      for (const auto& p : t.points) {
        s.x.push_back(static_cast<double>(p.calls));
        s.y.push_back(p.best_error);
      }
      ss.push_back(std::move(s));
    }
    if (r.predict_error) ss.push_back({"predict (0 calls)", {0.0}, {*r.predict_error}, false});
    files.emplace_back("search_trace.svg", plot_svg("Error versus simulator calls", "simulator calls", "best phase error", ss));
  }
  if (r.pca && !r.pca->points.empty()) {
    std::vector<Series> ss;
    for (const auto& p : r.pca->points) {
      auto it = std::find_if(ss.begin(), ss.end(), [&](const Series& s) { return s.name == p.set; });
      if (it == ss.end()) {
        ss.push_back({p.set, {}, {}, false});
        it = ss.end() - 1;
      }
      it->x.push_back(p.pc1);
      it->y.push_back(p.pc2);
    }
    files.emplace_back("pca.svg", plot_svg("Alloy distribution", "PC1", "PC2", ss));
  }
  if (r.closed_loop) {
    Series s{"min relative phase error", {}, {}, false};
    for (std::size_t p = 0; p < r.closed_loop->relative.size(); ++p) {
      s.x.push_back(static_cast<double>(p));
      s.y.push_back(r.closed_loop->relative[p]);
    }
    files.emplace_back("phase_errors.svg", plot_svg("Closed-loop phase error", "phase index", "relative error", {s}));
  }

  std::vector<fs::path> written;
  ordered_json hashes = ordered_json::object();
  for (const auto& [name, content] : files) {
    write_file(out_dir / name, content);
    written.push_back(out_dir / name);
    hashes[name] = sha256_hex(content);
  }
  ordered_json m;
  m["version"] = version_string();
  m["seeds"] = r.seeds;
  m["config_hashes"] = r.config_hashes;
  if (r.pca) m["pca_explained"] = r.pca->explained;
  m["files"] = hashes;
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
  written.push_back(out_dir / "manifest.json");
  return written;
}

}  // namespace forge::evaluation
