#pragma once

// Result persistence: the binary state container, CSV tables, metadata
// sidecars and a small SVG line chart.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "signpos/analysis.hpp"
#include "signpos/errors.hpp"
#include "signpos/lattice_basis.hpp"
#include "signpos/state_vector.hpp"

namespace signpos {

class IoError : public Error {
 public:
  using Error::Error;
};

// ---- state container ---------------------------------------------------------
//
// "SGNC" | u32 version | u32 n_sites | u32 n_up | u32 count |
// count * C(n_sites, n_up) * (f64 re, f64 im), all little endian.

inline constexpr std::uint32_t kStateContainerVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 4);
}

inline void put_f64(std::ostream& os, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated state container header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated state container payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace detail

inline void write_states(std::ostream& os, std::span<const StateVector> states) {
  if (states.empty()) throw InvalidArgument("no states to write");
  for (const auto& s : states) require_same_sector(states.front(), s);
  os.write("SGNC", 4);
  detail::put_u32(os, kStateContainerVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(states.front().n_sites));
  detail::put_u32(os, static_cast<std::uint32_t>(states.front().n_up));
  detail::put_u32(os, static_cast<std::uint32_t>(states.size()));
  for (const auto& s : states) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      detail::put_f64(os, s.amplitudes[i].real());
      detail::put_f64(os, s.amplitudes[i].imag());
    }
  }
  if (!os) throw IoError("failed writing state container");
}

inline std::vector<StateVector> read_states(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "SGNC") throw IoError("not a state container (bad magic)");
  const auto version = detail::get_u32(is);
  if (version != kStateContainerVersion) throw IoError("unsupported state container version " + std::to_string(version));
  const auto n = static_cast<int>(detail::get_u32(is));
  const auto n_up = static_cast<int>(detail::get_u32(is));
  const auto count = detail::get_u32(is);
  if (n < 1 || n > kMaxSites || n_up < 0 || n_up > n) throw IoError("state container has an invalid sector");
  const auto dim = static_cast<Eigen::Index>(binomial(n, n_up));
  std::vector<StateVector> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    StateVector s{n, n_up, Eigen::VectorXcd(dim)};
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double re = detail::get_f64(is);
      const double im = detail::get_f64(is);
      s.amplitudes[i] = Complex(re, im);
    }
    out.push_back(std::move(s));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes after state container payload");
  return out;
}

inline void write_states_file(const std::filesystem::path& path, std::span<const StateVector> states) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_states(os, states);
}

inline std::vector<StateVector> read_states_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_states(is);
}

// ---- CSV -----------------------------------------------------------------------

inline constexpr const char* kSweepCsvHeader = "n,boundary,j2,protocol,sign_avg,neg_frac,energy,degeneracy";
inline constexpr const char* kEntropyCsvHeader = "n,boundary,j2,partition,state_kind,entropy_bits";
inline constexpr const char* kOverlapCsvHeader = "n,boundary,j2,reference,overlap";

inline std::string format_number(double x, int digits = 15) {
  if (std::isnan(x)) return "nan";
  if (x == 0.0) x = 0.0;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : table.rows) {
    os << r.n_sites << ',' << to_string(r.boundary) << ',' << format_number(r.j2, 10) << ','
       << csv_field(r.protocol) << ',' << format_number(r.sign_average) << ',' << format_number(r.negative_fraction)
       << ',' << format_number(r.energy) << ',' << r.degeneracy << '\n';
  }
}

inline void write_entropy_csv(std::ostream& os, std::span<const EntropyRow> rows) {
  os << kEntropyCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.n_sites << ',' << to_string(r.boundary) << ',' << format_number(r.j2, 10) << ',' << to_string(r.partition)
       << ',' << csv_field(r.state_kind) << ',' << format_number(r.entropy_bits) << '\n';
  }
}

inline void write_overlap_csv(std::ostream& os, std::span<const OverlapRow> rows) {
  os << kOverlapCsvHeader << '\n';
  for (const auto& r : rows) {
    const std::pair<const char*, double> refs[] = {{"i", r.overlap_i}, {"ii", r.overlap_ii}, {"iii", r.overlap_iii}};
    for (const auto& [name, value] : refs) {
      os << r.n_sites << ',' << to_string(r.boundary) << ',' << format_number(r.j2, 10) << ',' << name << ','
         << format_number(value) << '\n';
    }
  }
}

/// Writes `content` to `path` and the metadata block to `path.meta.json`.
inline void write_with_metadata(const std::filesystem::path& path, const std::string& content,
                                const nlohmann::json& metadata) {
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw IoError("failed writing " + path.string());
  }
  std::ofstream meta(path.string() + ".meta.json", std::ios::binary);
  if (!meta) throw IoError("cannot write metadata for " + path.string());
  meta << metadata.dump(2) << '\n';
}

// ---- SVG line chart ------------------------------------------------------------

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label = "J2";
  std::string y_label;
  int width = 640;
  int height = 420;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

}  // namespace detail

/// Self-contained SVG with axes, ticks, one polyline per series and a legend.
/// Non-finite points break the line.
inline std::string render_line_chart(const ChartSpec& spec, std::span<const ChartSeries> series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;

  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::xml_escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : detail::nice_ticks(x0, x1)) {
    os << "<line x1=\"" << px(t) << "\" y1=\"" << top + ph << "\" x2=\"" << px(t) << "\" y2=\"" << top + ph + 5
       << "\" stroke=\"black\"/><text x=\"" << px(t) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
       << format_number(t, 4) << "</text>\n";
  }
  for (double t : detail::nice_ticks(y0, y1)) {
    os << "<line x1=\"" << left - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << left << "\" y2=\"" << py(t)
       << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
       << format_number(t, 4) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << spec.height - 12 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(spec.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % std::size(palette)];
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      points += format_number(px(s.x[i]), 6) + "," + format_number(py(s.y[i]), 6) + " ";
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
    }
    flush();
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4
       << "\">" << detail::xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// One series per (n, protocol) of sign_average against J2.
inline std::vector<ChartSeries> sweep_series(const SweepTable& table) {
  std::vector<ChartSeries> out;
  std::map<std::pair<int, std::string>, std::size_t> index;
  for (const auto& r : table.rows) {
    const auto key = std::make_pair(r.n_sites, r.protocol);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({"N=" + std::to_string(r.n_sites) + " " + r.protocol, {}, {}});
    }
    out[it->second].x.push_back(r.j2);
    out[it->second].y.push_back(r.sign_average);
  }
  return out;
}

}  // namespace signpos
