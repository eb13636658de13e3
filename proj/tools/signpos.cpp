// signpos: command-line front end.
//
//   signpos ground    -n 6 -b obc --j2 0.5 --protocol mpr
//   signpos sweep     -n 6,8,10 --j2-grid 0:2:0.1 --protocol mpr,odd-even --format csv,svg
//   signpos search    -n 6 -b pbc --j2 1.0 --mode mpr-cz
//   signpos transform -n 6 -b pbc --protocol mpr-cz --verify
//   signpos entropy   -n 6 -b pbc --j2-grid 0.8,1,1.5
//   signpos overlap   -n 10 --j2-grid 0:2:0.1
//
// Exit status: 0 on success, 1 when a computation failed or a requested
// row/result could not be produced, 2 on usage errors.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "signpos/signpos.hpp"

using namespace signpos;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

// "lo:hi:step" (inclusive of hi up to rounding) or "a,b,c".
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("grid range must be lo:hi:step, got '" + text + "'");
    const double lo = parse_double(parts[0]), hi = parse_double(parts[1]), step = parse_double(parts[2]);
    if (!(step > 0) || hi < lo) throw UsageError("bad grid range '" + text + "'");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= count; ++i) {
      const double x = lo + static_cast<double>(i) * step;
      out.push_back(std::round(x * 1e12) / 1e12);
    }
    return out;
  }
  for (const auto& p : split(text, ',')) out.push_back(parse_double(p));
  return out;
}

Protocol load_protocol_file(const std::string& path, int n) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open protocol file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError("protocol file " + path + ": " + e.what());
  }
  Protocol p = j.get<Protocol>();
  if (p.label.empty()) p.label = "file:" + path;
  if (p.n_sites != n) {
    throw InvalidProtocol("protocol file " + path + " is for " + std::to_string(p.n_sites) + " sites, not " +
                          std::to_string(n));
  }
  return p;
}

Protocol resolve_protocol(const std::string& spec, int n) {
  if (spec.rfind("file:", 0) == 0) return load_protocol_file(spec.substr(5), n);
  return protocol_by_name(spec, n);
}

// ---- options shared by every command, with JSON config fallback ---------------

struct Binding {
  CLI::Option* option;
  std::string key;
  std::function<void(const json&)> load;
  std::function<json()> dump;
};

struct Options {
  std::vector<int> n{6};
  std::string boundary = "obc";
  double j1 = 1.0;
  double j2 = 0.0;
  std::string j2_grid = "0:2:0.1";
  std::string protocol;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::string format;
  std::string config;
  double tol = 1e-10;
  int max_iterations = 20000;

  // command specific
  int k = 4;
  std::string mode = "exhaustive";
  int period = 4;
  std::size_t top_k = 10;
  std::uint64_t shard_start = 0;
  std::uint64_t shard_end = std::numeric_limits<std::uint64_t>::max();
  int cz_max_distance = 1;
  bool verify = false;
  std::string partitions = "contiguous_half,abba_sublattice";
  std::string states = "raw,mpr-cz";

  std::vector<Binding> bindings;

  template <class T>
  CLI::Option* bind(CLI::App* app, const std::string& flags, T& var, const std::string& key,
                    const std::string& help) {
    CLI::Option* o = app->add_option(flags, var, help)->capture_default_str();
    bindings.push_back({o, key,
                        [&var](const json& j) {
                          if constexpr (std::is_same_v<T, std::vector<int>>) {
                            if (j.is_number_integer()) {
                              var = {j.get<int>()};
                              return;
                            }
                          }
                          var = j.get<T>();
                        },
                        [&var] { return json(var); }});
    return o;
  }

  void add_flag(CLI::App* app, const std::string& flags, bool& var, const std::string& key, const std::string& help) {
    CLI::Option* o = app->add_flag(flags, var, help);
    bindings.push_back({o, key, [&var](const json& j) { var = j.get<bool>(); }, [&var] { return json(var); }});
  }

  bool given(const std::string& key) const {
    for (const auto& b : bindings) {
      if (b.key == key) return b.option->count() > 0 || from_config.count(key) > 0;
    }
    return false;
  }

  std::set<std::string> from_config;

  // Fills every option not given on the command line from the config file.
  void apply_config(const std::string& command) {
    if (config.empty()) return;
    std::ifstream is(config);
    if (!is) throw UsageError("cannot open config file " + config);
    json j;
    try {
      j = json::parse(is, nullptr, true, true);
    } catch (const json::exception& e) {
      throw UsageError("config file " + config + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    json merged = json::object();
    for (const auto& [key, value] : j.items()) {
      if (!value.is_object()) merged[key] = value;
    }
    if (j.contains(command) && j[command].is_object()) {
      for (const auto& [key, value] : j[command].items()) merged[key] = value;
    }
    for (const auto& [key, value] : merged.items()) {
      auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == key; });
      if (it == bindings.end()) {
        std::cerr << "warning: config key '" << key << "' is not used by " << command << "\n";
        continue;
      }
      if (it->option->count() > 0) continue;
      try {
        it->load(value);
      } catch (const json::exception& e) {
        throw UsageError("config key '" + key + "': " + e.what());
      }
      from_config.insert(key);
    }
  }

  json effective() const {
    json j = json::object();
    for (const auto& b : bindings) {
      if (b.key != "config") j[b.key] = b.dump();
    }
    return j;
  }

  Boundary parsed_boundary() const {
    try {
      return parse_boundary(boundary);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  int single_n() const {
    if (n.size() != 1) throw UsageError("this command takes a single -n value");
    return n.front();
  }

  std::vector<double> grid() const {
    if (given("j2_grid")) return parse_grid(j2_grid);
    if (given("j2")) return {j2};
    return parse_grid(j2_grid);
  }

  SolverOptions solver() const {
    SolverOptions s;
    if (!(tol > 0)) throw UsageError("--tol must be positive");
    if (max_iterations < 1) throw UsageError("--max-iterations must be positive");
    if (threads < 1) throw UsageError("--threads must be positive");
    s.tol = tol;
    s.max_iterations = max_iterations;
    s.seed = seed;
    s.threads = threads;
    return s;
  }

  std::set<std::string> formats(const std::string& fallback, const std::set<std::string>& allowed) const {
    std::set<std::string> out;
    for (const auto& f : split(format.empty() ? fallback : format, ',')) {
      if (!allowed.count(f)) throw UsageError("format '" + f + "' is not available for this command");
      out.insert(f);
    }
    if (out.empty()) throw UsageError("no output format selected");
    return out;
  }
};

void add_shared(CLI::App* app, Options& o) {
  o.bind(app, "-n,--sites", o.n, "n", "number of sites (comma separated list where allowed)")->delimiter(',');
  o.bind(app, "-b,--boundary", o.boundary, "boundary", "boundary condition")->check(CLI::IsMember({"obc", "pbc"}));
  o.bind(app, "--j1", o.j1, "j1", "nearest-neighbor coupling");
  o.bind(app, "--j2", o.j2, "j2", "next-nearest-neighbor coupling");
  o.bind(app, "--j2-grid", o.j2_grid, "j2_grid", "J2 values, lo:hi:step or a,b,c");
  o.bind(app, "--protocol", o.protocol, "protocol", "mpr, odd-even, torlai, mpr-cz, raw or file:<path>");
  o.bind(app, "--seed", o.seed, "seed", "random seed");
  o.bind(app, "--threads", o.threads, "threads", "worker threads");
  o.bind(app, "--out-dir", o.out_dir, "out_dir", "output directory");
  o.bind(app, "--format", o.format, "format", "output formats, comma separated subset of csv,json,svg");
  o.bind(app, "--tol", o.tol, "tol", "eigensolver residual tolerance");
  o.bind(app, "--max-iterations", o.max_iterations, "max_iterations", "eigensolver matrix-vector budget");
  o.bind(app, "--config", o.config, "config", "JSON config file; command-line flags take precedence");
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct Output {
  std::filesystem::path dir;
  json meta;

  Output(const Options& o, const std::string& command) : dir(o.out_dir) {
    meta = {{"command", command}, {"config", o.effective()}, {"created", timestamp()}};
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto path = dir / name;
    write_with_metadata(path, content, meta);
    std::cout << "wrote " << path.string() << "\n";
    return path;
  }
};

std::string fmt(double x, int digits = 10) { return format_number(x, digits); }

// Sign metrics at round-off level print as 0.
std::string fmt_metric(double x) { return fmt(std::abs(x) < 1e-12 ? 0.0 : x); }

// ---- ground -------------------------------------------------------------------

int cmd_ground(const Options& o) {
  const int n = o.single_n();
  const auto boundary = o.parsed_boundary();
  const auto model = build_chain(n, boundary, o.j1, o.j2);
  const auto basis = half_filling_sector(n);
  auto solver = o.solver();
  if (o.k < 1) throw UsageError("-k must be positive");
  solver.k = std::min<int>(o.k, static_cast<int>(basis.size()));
  const auto h = heisenberg_terms(model);
  const EigenResult r = lowest_eigenpairs(h, basis, solver);

  std::cout << "n=" << n << " boundary=" << to_string(boundary) << " j1=" << fmt(o.j1) << " j2=" << fmt(o.j2)
            << " dim=" << basis.size() << "\n";
  for (std::size_t g = 0; g < r.degeneracy_groups.size(); ++g) {
    const auto& group = r.degeneracy_groups[g];
    std::cout << "level " << g << ": E = " << fmt(r.eigenvalues[group.front()], 12) << "  degeneracy "
              << group.size();
    if (group.size() > 1 && group.back() + 1 == r.eigenvalues.size()) std::cout << " (may be incomplete)";
    std::cout << "\n";
  }
  // The ground level may extend beyond k; close it off before measuring signs.
  const GroundLevel level = solve_ground_level(h, basis, solver);
  const auto frame = real_frame(level.vectors);
  const auto raw = protocol_sign(identity_protocol(n), basis, frame, kRealTolerance, o.seed);
  std::cout << "ground degeneracy " << level.degeneracy() << "\n";
  std::cout << "raw |<Sign>| = " << fmt_metric(raw.report.sign_average) << "  negative fraction "
            << fmt(raw.report.negative_fraction) << "\n";
  int status = 0;
  if (!o.protocol.empty()) {
    const Protocol p = resolve_protocol(o.protocol, n);
    const auto s = protocol_sign(p, basis, frame, kRealTolerance, o.seed);
    if (s.real) {
      std::cout << p.label << " |<Sign>| = " << fmt_metric(s.report.sign_average) << "  negative fraction "
                << fmt(s.report.negative_fraction) << "\n";
    } else {
      std::cout << p.label << ": transformed ground level is not real (residual " << fmt(s.report.phase_residual, 3)
                << ")\n";
      status = kExitFailure;
    }
  }

  Output out(o, "ground");
  const auto path = out.dir / "ground.sgnc";
  write_states_file(path, level.vectors);
  json meta = out.meta;
  meta["energy"] = level.energy;
  meta["degeneracy"] = level.degeneracy();
  std::ofstream(path.string() + ".meta.json") << meta.dump(2) << '\n';
  std::cout << "wrote " << path.string() << "\n";
  return status;
}

// ---- sweep --------------------------------------------------------------------

void split_protocols(const std::string& list, std::vector<std::string>& named, std::vector<std::string>& files) {
  for (const auto& p : split(list, ',')) (p.rfind("file:", 0) == 0 ? files : named).push_back(p);
}

json sweep_rows_json(const SweepTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json j = {{"n", r.n_sites},         {"boundary", to_string(r.boundary)},
              {"j2", r.j2},             {"protocol", r.protocol},
              {"degeneracy", r.degeneracy}};
    auto num = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
    j["sign_avg"] = num(r.sign_average);
    j["neg_frac"] = num(r.negative_fraction);
    j["neg_mass"] = num(r.negative_mass);
    j["energy"] = num(r.energy);
    if (!r.ok()) j["error"] = r.error;
    rows.push_back(j);
  }
  return rows;
}

int cmd_sweep(const Options& o) {
  SweepSpec spec;
  spec.n_sites = o.n;
  spec.boundary = o.parsed_boundary();
  spec.j1 = o.j1;
  spec.j2_grid = o.grid();
  spec.solver = o.solver();
  spec.threads = o.threads;
  if (!o.protocol.empty()) {
    std::vector<std::string> files;
    spec.protocols.clear();
    split_protocols(o.protocol, spec.protocols, files);
    for (const auto& f : files) {
      std::ifstream is(f.substr(5));
      if (!is) throw IoError("cannot open protocol file " + f.substr(5));
      Protocol p = json::parse(is).get<Protocol>();
      if (p.label.empty()) p.label = f;
      spec.custom.push_back(p);
    }
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto formats = o.formats("csv", {"csv", "json", "svg"});
  const SweepTable table = run_sweep(spec);

  for (const auto& r : table.rows) {
    std::printf("n=%-3d j2=%-6s %-14s sign=%-12s neg_frac=%-12s%s%s\n", r.n_sites, fmt(r.j2, 6).c_str(),
                r.protocol.c_str(), fmt(r.sign_average, 8).c_str(), fmt(r.negative_fraction, 8).c_str(),
                r.ok() ? "" : " error: ", r.error.c_str());
  }
  Output out(o, "sweep");
  if (formats.count("csv")) {
    std::ostringstream os;
    write_sweep_csv(os, table);
    out.write("sweep.csv", os.str());
  }
  if (formats.count("json")) out.write("sweep.json", json{{"rows", sweep_rows_json(table)}}.dump(2) + "\n");
  if (formats.count("svg")) {
    ChartSpec chart;
    chart.title = "sign average, " + std::string(to_string(spec.boundary));
    chart.y_label = "<Sign>";
    out.write("sweep.svg", render_line_chart(chart, sweep_series(table)));
  }
  if (!table.all_ok()) {
    std::cerr << "some sweep rows failed; see the error column\n";
    return kExitFailure;
  }
  return 0;
}

// ---- search -------------------------------------------------------------------

int cmd_search(const Options& o) {
  const int n = o.single_n();
  const auto boundary = o.parsed_boundary();
  SearchConfig cfg;
  cfg.top_k = o.top_k;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.boundary = boundary;
  cfg.cz_max_distance = o.cz_max_distance;
  cfg.shard_start = o.shard_start;
  cfg.shard_end = o.shard_end;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (o.mode != "exhaustive" && o.mode != "template" && o.mode != "mpr-cz") {
    throw UsageError("--mode must be exhaustive, template or mpr-cz");
  }
  const auto formats = o.formats("json", {"json"});
  const auto basis = half_filling_sector(n);

  if (o.mode == "exhaustive") {
    // Refuse before solving anything.
    const SingleQubitStream stream(n, cfg);
    const auto [lo, hi] = detail::shard_range(cfg, stream.size());
    if (hi - lo >= cfg.max_candidates) {
      std::cerr << "refused: exhaustive search over " << (hi - lo) << " candidates reaches the cap of "
                << cfg.max_candidates << "; use --shard-start/--shard-end\n";
      return kExitFailure;
    }
  }

  const GroundLevel level = solve_ground_level(build_chain(n, boundary, o.j1, o.j2), o.solver());
  SearchResult result;
  if (o.mode == "exhaustive") {
    result = brute_force_search(level.vectors, basis, cfg);
  } else if (o.mode == "template") {
    result = template_search(level.vectors, basis, o.period, cfg);
  } else {
    result = search_mpr_plus_cz(level.vectors, basis, cfg);
  }

  std::cout << "evaluated " << result.n_evaluated << " candidates (" << result.n_skipped_nonreal
            << " not real), ground degeneracy " << level.degeneracy() << "\n";
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& r = result.ranked[i];
    std::cout << i + 1 << ". |<Sign>| = " << fmt(r.report.sign_average, 12) << "  " << r.protocol.label;
    std::cout << "  angles";
    for (auto a : r.protocol.angles) std::cout << ' ' << quarter_turns(a);
    if (!r.protocol.cz_pairs.empty()) {
      std::cout << "  cz";
      for (const auto& [a, b] : r.protocol.cz_pairs) std::cout << ' ' << a << '-' << b;
    }
    std::cout << "\n";
  }
  Output out(o, "search");
  if (formats.count("json")) {
    json j = to_json(result);
    j["n"] = n;
    j["boundary"] = to_string(boundary);
    j["j1"] = o.j1;
    j["j2"] = o.j2;
    j["mode"] = o.mode;
    j["degeneracy"] = level.degeneracy();
    out.write("search.json", j.dump(2) + "\n");
  }
  return result.ranked.empty() ? kExitFailure : 0;
}

// ---- transform ----------------------------------------------------------------

int cmd_transform(const Options& o) {
  const int n = o.single_n();
  const auto boundary = o.parsed_boundary();
  if (o.protocol.empty()) throw UsageError("transform needs --protocol");
  const auto model = build_chain(n, boundary, o.j1, o.j2);
  const Protocol p = resolve_protocol(o.protocol, n);
  const auto h = heisenberg_terms(model);
  const auto ht = transform_hamiltonian(h, p);
  std::cout << to_listing(ht);
  if (!o.verify) return 0;
  if (n > 10) throw UsageError("--verify is limited to n <= 10");
  const auto basis = half_filling_sector(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a(dense_matrix(h, basis), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> b(dense_matrix(ht, basis), Eigen::EigenvaluesOnly);
  const double dev = (a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff();
  std::cerr << "max spectral deviation " << fmt(dev, 3) << " over " << basis.size() << " levels\n";
  if (!(dev < 1e-9)) {
    std::cerr << "verify failed\n";
    return kExitFailure;
  }
  return 0;
}

// ---- entropy / overlap --------------------------------------------------------

int cmd_entropy(const Options& o) {
  const auto boundary = o.parsed_boundary();
  const auto grid = o.grid();
  if (grid.empty()) throw UsageError("empty J2 grid");
  std::vector<PartitionKind> parts;
  for (const auto& s : split(o.partitions, ',')) {
    try {
      parts.push_back(parse_partition(s));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const auto kinds = split(o.states, ',');
  if (parts.empty() || kinds.empty()) throw UsageError("need at least one partition and one state kind");
  const auto formats = o.formats("csv", {"csv", "svg"});

  std::vector<EntropyRow> rows;
  for (int n : o.n) {
    auto r = entropy_rows(n, boundary, o.j1, grid, parts, kinds, o.solver());
    rows.insert(rows.end(), r.begin(), r.end());
  }
  for (const auto& r : rows) {
    std::printf("n=%-3d j2=%-6s %-16s %-8s S=%s bits\n", r.n_sites, fmt(r.j2, 6).c_str(),
                std::string(to_string(r.partition)).c_str(), r.state_kind.c_str(), fmt(r.entropy_bits, 10).c_str());
  }
  Output out(o, "entropy");
  if (formats.count("csv")) {
    std::ostringstream os;
    write_entropy_csv(os, rows);
    out.write("entropy.csv", os.str());
  }
  if (formats.count("svg")) {
    std::map<std::string, ChartSeries> series;
    for (const auto& r : rows) {
      auto& s = series["N=" + std::to_string(r.n_sites) + " " + std::string(to_string(r.partition)) + " " +
                       r.state_kind];
      s.x.push_back(r.j2);
      s.y.push_back(r.entropy_bits);
    }
    std::vector<ChartSeries> list;
    for (auto& [name, s] : series) {
      s.name = name;
      list.push_back(s);
    }
    ChartSpec chart;
    chart.title = "entanglement entropy";
    chart.y_label = "S (bits)";
    out.write("entropy.svg", render_line_chart(chart, list));
  }
  return 0;
}

int cmd_overlap(const Options& o) {
  const auto boundary = o.parsed_boundary();
  const auto grid = o.grid();
  if (grid.empty()) throw UsageError("empty J2 grid");
  const auto formats = o.formats("csv", {"csv", "svg"});
  std::vector<OverlapRow> rows;
  for (int n : o.n) {
    auto r = reference_overlap_curves(n, boundary, grid, o.solver());
    rows.insert(rows.end(), r.begin(), r.end());
  }
  for (const auto& r : rows) {
    std::printf("n=%-3d j2=%-6s i=%-12s ii=%-12s iii=%s\n", r.n_sites, fmt(r.j2, 6).c_str(),
                fmt(r.overlap_i, 8).c_str(), fmt(r.overlap_ii, 8).c_str(), fmt(r.overlap_iii, 8).c_str());
  }
  Output out(o, "overlap");
  out.meta["overlap"] = "unsquared |<a|b>|";
  if (formats.count("csv")) {
    std::ostringstream os;
    write_overlap_csv(os, rows);
    out.write("overlap.csv", os.str());
  }
  if (formats.count("svg")) {
    std::vector<ChartSeries> list;
    for (int n : o.n) {
      for (const char* ref : {"i", "ii", "iii"}) {
        ChartSeries s{"N=" + std::to_string(n) + " (" + ref + ")", {}, {}};
        for (const auto& r : rows) {
          if (r.n_sites != n) continue;
          s.x.push_back(r.j2);
          s.y.push_back(ref == std::string("i") ? r.overlap_i : ref == std::string("ii") ? r.overlap_ii : r.overlap_iii);
        }
        list.push_back(s);
      }
    }
    ChartSpec chart;
    chart.title = "overlap with reference states";
    chart.y_label = "|<psi|ref>|";
    out.write("overlap.svg", render_line_chart(chart, list));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-structure positivization for the J1-J2 Heisenberg chain"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    Options opts;
    std::function<int(const Options&)> run;
  };
  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& help, std::function<int(const Options&)> run) {
    auto c = std::make_unique<Command>();
    c->app = app.add_subcommand(name, help);
    c->run = std::move(run);
    add_shared(c->app, c->opts);
    commands.push_back(std::move(c));
    return commands.back().get();
  };

  auto* ground = add("ground", "lowest eigenpairs, degeneracy and sign of the ground level", cmd_ground);
  ground->opts.bind(ground->app, "-k", ground->opts.k, "k", "number of eigenpairs to report");

  add("sweep", "sign metrics over a J2 grid", cmd_sweep);

  auto* search = add("search", "search for positivizing protocols", cmd_search);
  auto& so = search->opts;
  so.bind(search->app, "--mode", so.mode, "mode", "exhaustive, template or mpr-cz")
      ->check(CLI::IsMember({"exhaustive", "template", "mpr-cz"}));
  so.bind(search->app, "--period", so.period, "period", "template period");
  so.bind(search->app, "--top-k", so.top_k, "top_k", "number of ranked results kept");
  so.bind(search->app, "--shard-start", so.shard_start, "shard_start", "first candidate index");
  so.bind(search->app, "--shard-end", so.shard_end, "shard_end", "one past the last candidate index");
  so.bind(search->app, "--cz-max-distance", so.cz_max_distance, "cz_max_distance", "longest CZ pair distance");

  auto* transform = add("transform", "print the transformed Hamiltonian", cmd_transform);
  transform->opts.add_flag(transform->app, "--verify", transform->opts.verify, "verify",
                           "compare dense spectra before and after");

  auto* entropy = add("entropy", "entanglement entropy of raw and transformed ground states", cmd_entropy);
  entropy->opts.bind(entropy->app, "--partition", entropy->opts.partitions, "partition",
                     "contiguous_half, abba_sublattice, abab_sublattice");
  entropy->opts.bind(entropy->app, "--states", entropy->opts.states, "states", "state kinds (protocol names)");

  add("overlap", "overlaps with the reference states", cmd_overlap);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      c->opts.apply_config(c->app->get_name());
      return c->run(c->opts);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const InvalidGeometry& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const CandidateCapExceeded& e) {
      std::cerr << "refused: " << e.what() << " (" << e.count() << " candidates)\n";
      return kExitFailure;
    } catch (const ConvergenceError& e) {
      std::cerr << "error: " << e.what() << "\n  best residuals:";
      for (double r : e.best_residuals()) std::cerr << ' ' << fmt(r, 3);
      std::cerr << "\n";
      return kExitFailure;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitUsage;
}
