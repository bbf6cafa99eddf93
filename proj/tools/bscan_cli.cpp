// bscan: command-line front end for the blocked scan library.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bscan/bscan.hpp"
#include "bscan/report.hpp"

namespace {

using namespace bscan;

enum Exit : int { ok = 0, usage = 2, degenerate = 3, invariant = 4 };

Dataset read_dataset(const std::string& path) {
  if (path == "-") return ingest_csv(std::cin);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input '" + path + "'");
  return ingest_csv(in);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

// ---- synth ----

struct SynthArgs {
  SynthConfig cfg;
  std::string output;
};

int run_synth(const SynthArgs& a) {
  std::ostringstream os;
  write_csv(os, synthesize(a.cfg));
  write_text(a.output, os.str());
  return ok;
}

// ---- scan ----

struct ScanArgs {
  std::string input;
  double alpha = 0.05;
  std::size_t permutations = 1000;
  std::uint64_t seed = 1;
  std::string weight = "ell2";
  bool two_sided = false;
  std::string method = "blocked";
  std::string plot;
  std::string output;
  bool include_identity = false;
  unsigned threads = 0;
};

void check_report(const MethodReport& rep) {
  if (rep.calibration && !rep.calibration->floor_infeasible &&
      rep.calibration->union_rate > rep.calibration->alpha)
    throw InvariantViolation("calibrated union rate exceeds alpha");
  for (const auto& d : rep.detections)
    if (!(d.t_value > d.threshold)) throw InvariantViolation("reported rectangle does not exceed its threshold");
}

int run_scan(const ScanArgs& a) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ValidationError("--alpha must lie in (0, 1)");
  if (a.permutations < 100) throw ValidationError("--permutations must be at least 100");
  const WeightScheme scheme = parse_weight_scheme(a.weight);
  const bool want_blocked = a.method == "blocked" || a.method == "both";
  const bool want_conv = a.method == "conventional" || a.method == "both";

  const Dataset data = read_dataset(a.input);
  if (data.degenerate()) throw DegenerateLabels();
  if (block_range(data.size()).empty()) throw EmptyBlockRange(data.size());

  NullOptions opt;
  opt.include_identity = a.include_identity;
  opt.two_sided = a.two_sided;
  opt.workers = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  const ScanFamily family = compile_family(data);
  const PermutationTable table = simulate_null(data, family, a.permutations, a.seed, opt);

  std::vector<MethodReport> reports;
  if (want_blocked) {
    MethodReport rep;
    rep.method = "blocked";
    rep.alpha = a.alpha;
    rep.calibration = solve_alpha_tilde(table, a.alpha, scheme);
    rep.detections = blocked_scan(data, *rep.calibration);
    rep.minimal = minimal_rects(rep.detections);
    reports.push_back(std::move(rep));
  }
  if (want_conv) {
    MethodReport rep;
    rep.method = "conventional";
    rep.alpha = a.alpha;
    rep.critical_value = global_critical_value(table, a.alpha);
    rep.detections = conventional_scan(data, table, a.alpha);
    rep.minimal = minimal_rects(rep.detections);
    reports.push_back(std::move(rep));
  }
  for (const auto& r : reports) check_report(r);

  Json doc;
  if (reports.size() == 1) {
    doc = to_json(reports[0]);
  } else {
    doc = Json::object();
    for (const auto& r : reports) doc[r.method] = to_json(r);
  }
  write_text(a.output, doc.dump(2) + "\n");

  if (!a.plot.empty()) {
    std::vector<const MethodReport*> panels;
    for (const auto& r : reports) panels.push_back(&r);
    std::ostringstream os;
    write_svg(os, data, panels);
    write_text(a.plot, os.str());
  }
  if (!a.output.empty() && a.output != "-") {
    for (const auto& r : reports)
      std::cerr << r.method << ": " << r.detections.size() << " detections, " << r.minimal.size()
                << " minimal\n";
  }
  return ok;
}

// ---- bound ----

struct BoundArgs {
  std::size_t n_total = 0, reds = 0, draws = 0;
  long long x = 0;
  double t = 0.0;
  std::string side = "upper";
};

int run_bound(const BoundArgs& a) {
  HypergeomParams h{a.n_total, a.reds, a.draws, a.x};
  std::cout << std::setprecision(12);
  if (a.side == "two_sided_L") {
    h.x = static_cast<long long>(h.mean());
    const double c = tail_constant(h);
    const double bound = tail_bound_l(h, a.t);
    // P(L(X) >= t) exactly, by summing the pmf over the support.
    double exact = 0.0;
    for (long long v = h.support_min(); v <= h.support_max(); ++v) {
      HypergeomParams hv = h;
      hv.x = v;
      if (l_function(hv) >= a.t) exact += std::exp(static_cast<double>(hypergeom_log_pmf(hv, v)));
    }
    std::cout << "t " << a.t << "\nC " << c << "\nbound " << bound << "\nexact " << exact << "\nratio "
              << (exact > 0 ? bound / exact : INFINITY) << "\n";
    return ok;
  }
  TailSide side;
  if (a.side == "upper") side = TailSide::upper;
  else if (a.side == "lower") side = TailSide::lower;
  else throw ValidationError("--side must be upper, lower or two_sided_L");
  h.validate();
  const double l = l_function(h);
  const double c = tail_constant(h);
  // At the mean both one-sided bounds reduce to 2C.
  const auto lhs = static_cast<unsigned long long>(h.x) * h.n_total;
  const auto rhs = static_cast<unsigned long long>(h.draws) * h.reds;
  const double bound = lhs == rhs ? c * (l + 2.0) * std::exp(-l) : tail_bound(h, side);
  const double exact = exact_tail(h, side);
  std::cout << "L " << l << "\nC " << c << "\nbound " << bound << "\nexact " << exact << "\nratio "
            << (exact > 0 ? bound / exact : INFINITY) << "\n";
  if (bound < exact) throw InvariantViolation("tail bound below the exact tail");
  return ok;
}

// ---- bench ----

struct BenchArgs {
  std::vector<std::size_t> sizes{1024, 2048, 4096, 8192, 16384, 32768, 65536};
  std::uint64_t seed = 1;
  std::string output;
};

struct BenchRow {
  std::size_t n = 0;
  std::size_t rects = 0;
  double seconds = 0.0;
  double max_t = 0.0;
};

double loglog_slope(const std::vector<BenchRow>& rows) {
  if (rows.size() < 2) return NAN;
  double mx = 0, my = 0;
  for (const auto& r : rows) {
    mx += std::log(static_cast<double>(r.n));
    my += std::log(r.seconds);
  }
  mx /= static_cast<double>(rows.size());
  my /= static_cast<double>(rows.size());
  double sxy = 0, sxx = 0;
  for (const auto& r : rows) {
    const double dx = std::log(static_cast<double>(r.n)) - mx;
    sxy += dx * (std::log(r.seconds) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

int run_bench(const BenchArgs& a) {
  std::vector<BenchRow> rows;
  std::cout << std::setw(10) << "N" << std::setw(16) << "rects" << std::setw(14) << "seconds" << "\n";
  for (const std::size_t n : a.sizes) {
    const Dataset data(synthesize_null(n, 0.4, a.seed));
    BenchRow row;
    row.n = n;
    row.rects = count_all(data);
    const auto range = block_range(n);
    const auto start = std::chrono::steady_clock::now();
    for (int ell = range.first; ell <= range.last; ++ell)
      row.max_t = std::max(row.max_t, block_maximum(data, BlockSpec::at(ell)));
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
    std::cout << std::setw(10) << n << std::setw(16) << row.rects << std::setw(14) << std::fixed
              << std::setprecision(4) << row.seconds << std::defaultfloat << "\n";
  }
  const double slope = loglog_slope(rows);
  std::cout << "slope " << std::setprecision(4) << slope << "\n";
  if (!a.output.empty()) {
    Json doc{{"slope", slope}, {"rows", Json::array()}};
    for (const auto& r : rows)
      doc["rows"].push_back({{"n", r.n}, {"rects", r.rects}, {"seconds", r.seconds}, {"max_t", r.max_t}});
    write_text(a.output, doc.dump(2) + "\n");
  }
  return ok;
}

// ---- oracle-check ----

struct OracleArgs {
  std::size_t datasets = 20;
  std::size_t max_n = 60;
  std::uint64_t seed = 1;
};

int run_oracle_check(const OracleArgs& a) {
  if (a.max_n > brute_force_limit) throw TooLarge(a.max_n, brute_force_limit);
  std::mt19937_64 gen(a.seed);
  std::size_t failures = 0;
  for (std::size_t d = 0; d < a.datasets; ++d) {
    std::uniform_int_distribution<std::size_t> size(std::min<std::size_t>(20, a.max_n), a.max_n);
    std::uniform_real_distribution<double> coord(0.0, 1.0);
    std::vector<LabeledPoint> pts(size(gen));
    std::size_t ones = 0;
    for (auto& p : pts) {
      p.x = coord(gen);
      p.y = coord(gen);
      p.label = coord(gen) < 0.4 ? 1 : 0;
      ones += p.label;
    }
    if (ones == 0) pts[0].label = 1;
    if (ones == pts.size()) pts[0].label = 0;
    const Dataset data(std::move(pts));
    const BruteMax brute = brute_force_max(data);
    double best = 0.0;
    // Below N = 61 the block range is empty; block 3 is enumerated instead.
    auto range = block_range(data.size());
    if (range.size() == 0) range = BlockRange{3, 3};
    for (int ell = range.first; ell <= range.last; ++ell)
      enumerate_block(data, BlockSpec::at(ell), [&](const ApproxRect& r) {
        if (!r.empty) best = std::max(best, rect_statistic(r.counts, false));
      });
    const bool pass = best <= brute.t * (1 + 1e-12) + 1e-12;
    failures += pass ? 0 : 1;
    std::cout << "dataset " << d << " N=" << data.size() << " enumerated_max=" << best
              << " brute_max=" << brute.t << (pass ? " ok" : " FAIL") << "\n";
  }
  std::size_t bound_checks = 0, bound_fail = 0;
  for (const std::size_t n : {20u, 50u, 100u, 200u})
    for (const std::size_t r : {(n + 9) / 10, (n + 3) / 4, (n + 1) / 2})
      for (const std::size_t dr : {(n + 9) / 10, (n + 3) / 4, (n + 1) / 2}) {
        HypergeomParams h{n, r, dr, 0};
        for (long long x = h.support_min(); x <= h.support_max(); ++x) {
          h.x = x;
          const auto lhs = static_cast<unsigned long long>(x) * n;
          const auto rhs = static_cast<unsigned long long>(dr) * r;
          if (lhs == rhs) continue;
          const TailSide side = lhs > rhs ? TailSide::upper : TailSide::lower;
          ++bound_checks;
          if (exact_tail(h, side) > tail_bound(h, side)) ++bound_fail;
        }
      }
  std::cout << "tail bound checks " << bound_checks << ", violations " << bound_fail << "\n";
  failures += bound_fail;
  if (failures) throw InvariantViolation(std::to_string(failures) + " oracle check(s) failed");
  std::cout << "all oracle checks passed\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blocked scan statistic for Bernoulli-labelled point data"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate the synthetic mixture experiment as CSV");
  c_synth->add_option("-n,--points", synth.cfg.n_points, "Number of points")->capture_default_str();
  c_synth->add_option("--seed", synth.cfg.seed, "RNG seed")->capture_default_str();
  c_synth->add_option("--base-p", synth.cfg.base_p, "Label rate outside the effect regions")->capture_default_str();
  c_synth->add_option("--strip-p", synth.cfg.strip_p, "Label rate in the strip x >= 5")->capture_default_str();
  c_synth->add_option("--box-p", synth.cfg.box_p, "Label rate in the box [1,2]x[3,5]")->capture_default_str();
  c_synth->add_option("-o,--output", synth.output, "Output CSV (default stdout)");

  ScanArgs scan;
  auto* c_scan = app.add_subcommand("scan", "Calibrate by permutation and report significant rectangles");
  c_scan->add_option("input", scan.input, "Input CSV with header x,y,label ('-' for stdin)")->required();
  c_scan->add_option("--alpha", scan.alpha, "Simultaneous level")->capture_default_str();
  c_scan->add_option("--permutations", scan.permutations, "Number of label permutations (>= 100)")
      ->capture_default_str();
  c_scan->add_option("--seed", scan.seed, "RNG seed")->capture_default_str();
  c_scan->add_option("--weight", scan.weight, "Block weights: ell2 = l^2, ell10 = (10+l)^2")
      ->check(CLI::IsMember({"ell2", "ell10"}))
      ->capture_default_str();
  c_scan->add_flag("--two-sided", scan.two_sided, "Use the two-sided statistic");
  c_scan->add_option("--method", scan.method, "Calibration method")
      ->check(CLI::IsMember({"blocked", "conventional", "both"}))
      ->capture_default_str();
  c_scan->add_option("--plot", scan.plot, "Write an SVG plot of minimal rectangles");
  c_scan->add_option("--output", scan.output, "JSON report path (default stdout)");
  c_scan->add_flag("--include-identity", scan.include_identity, "Use the observed labels as permutation 0");
  c_scan->add_option("--threads", scan.threads, "Worker threads (0 = all cores)")->capture_default_str();

  BoundArgs bound;
  auto* c_bound = app.add_subcommand("bound", "Hypergeometric tail bound against the exact tail");
  c_bound->add_option("--N", bound.n_total, "Population size")->required();
  c_bound->add_option("--reds", bound.reds, "Red items")->required();
  c_bound->add_option("--draws", bound.draws, "Items drawn")->required();
  c_bound->add_option("--x", bound.x, "Observed red count (upper/lower)");
  c_bound->add_option("--t", bound.t, "Threshold on L (two_sided_L)");
  c_bound->add_option("--side", bound.side, "upper, lower or two_sided_L")
      ->check(CLI::IsMember({"upper", "lower", "two_sided_L"}))
      ->capture_default_str();

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time enumeration plus statistic evaluation across N");
  c_bench->add_option("--n", bench.sizes, "Dataset sizes")->delimiter(',')->capture_default_str();
  c_bench->add_option("--seed", bench.seed, "RNG seed")->capture_default_str();
  c_bench->add_option("--output", bench.output, "Optional JSON table");

  OracleArgs oracle;
  auto* c_oracle = app.add_subcommand("oracle-check", "Compare the scan against brute-force references");
  c_oracle->add_option("--datasets", oracle.datasets, "Random datasets to check")->capture_default_str();
  c_oracle->add_option("--max-n", oracle.max_n, "Largest dataset size (<= 80)")->capture_default_str();
  c_oracle->add_option("--seed", oracle.seed, "RNG seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  try {
    if (*c_synth) return run_synth(synth);
    if (*c_scan) return run_scan(scan);
    if (*c_bound) return run_bound(bound);
    if (*c_bench) return run_bench(bench);
    if (*c_oracle) return run_oracle_check(oracle);
  } catch (const DegenerateLabels& e) {
    std::cerr << "error: " << e.what() << "\n";
    return degenerate;
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return invariant;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return invariant;
  }
  return usage;
}
