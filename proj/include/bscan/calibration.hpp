#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bscan/approx_enum.hpp"
#include "bscan/dataset.hpp"
#include "bscan/error.hpp"
#include "bscan/statistic.hpp"

namespace bscan {

// Compiled rectangle family of a dataset: one plan per block. Depends on geometry only.
struct ScanFamily {
  std::size_t n_total = 0;
  BlockRange range;
  std::vector<BlockPlan> plans;

  std::size_t block_count() const noexcept { return plans.size(); }
};

inline ScanFamily compile_family(const Dataset& data) {
  ScanFamily fam;
  fam.n_total = data.size();
  fam.range = block_range(data.size());
  for (int ell = fam.range.first; ell <= fam.range.last; ++ell)
    fam.plans.push_back(compile_block(data, BlockSpec::at(ell)));
  return fam;
}

// Evaluates per-block maxima of the statistic for arbitrary label vectors over a compiled
// family. Holds scratch space, so use one evaluator per thread.
class BlockMaximaEvaluator {
 public:
  BlockMaximaEvaluator(const ScanFamily& family, std::size_t ones_total, bool two_sided)
      : family_(&family), ones_total_(ones_total), two_sided_(two_sided), ext_(family.n_total) {
    std::size_t widest = 0;
    for (const auto& plan : family.plans)
      for (std::size_t t = 0; t < plan.strip_count(); ++t)
        widest = std::max(widest, plan.strip_offset[t + 1] - plan.strip_offset[t]);
    cum_.resize(widest + 1);
  }

  // labels are indexed by x-order position.
  void evaluate(std::span<const std::uint8_t> labels, std::span<double> out) {
    for (std::size_t b = 0; b < family_->plans.size(); ++b) out[b] = block(family_->plans[b], labels);
  }

 private:
  double block(const BlockPlan& plan, std::span<const std::uint8_t> labels) {
    ext_.clear();
    std::int32_t* cum = cum_.data();
    const std::uint32_t* order = plan.order.data();
    const std::uint32_t* starts = plan.starts.data();
    for (std::size_t t = 0; t < plan.strip_count(); ++t) {
      const std::size_t begin = plan.strip_offset[t];
      const std::size_t size = plan.strip_offset[t + 1] - begin;
      cum[0] = 0;
      for (std::size_t u = 0; u < size; ++u) cum[u + 1] = cum[u] + labels[order[begin + u]];
      for (std::size_t g = plan.group_offset[t]; g < plan.group_offset[t + 1]; ++g) {
        const std::uint32_t len = plan.group_len[g];
        // ones(a) = cum[a + len - 1] - cum[a - 1]
        const std::int32_t* lo = cum - 1;
        const std::int32_t* hi = cum + len - 1;
        std::int32_t most = -1;
        std::int32_t fewest = std::numeric_limits<std::int32_t>::max();
        const std::size_t w_end = plan.start_offset[g + 1];
        if (two_sided_) {
          for (std::size_t w = plan.start_offset[g]; w < w_end; ++w) {
            const std::int32_t ones = hi[starts[w]] - lo[starts[w]];
            most = std::max(most, ones);
            fewest = std::min(fewest, ones);
          }
          ext_.add(len, most);
          ext_.add(len, fewest);
        } else {
          for (std::size_t w = plan.start_offset[g]; w < w_end; ++w)
            most = std::max(most, hi[starts[w]] - lo[starts[w]]);
          ext_.add_upper(len, most);
        }
      }
    }
    return ext_.max_statistic(ones_total_, two_sided_);
  }

  const ScanFamily* family_;
  std::size_t ones_total_;
  bool two_sided_;
  LengthExtremes ext_;
  std::vector<std::int32_t> cum_;
};

struct NullOptions {
  bool include_identity = false;  // permutation 0 keeps the observed labels
  bool two_sided = false;
  unsigned workers = 1;
};

// Joint per-permutation block maxima under label permutation.
struct PermutationTable {
  std::size_t n_perms = 0;
  BlockRange blocks;
  std::uint64_t seed = 0;
  bool include_identity = false;
  bool two_sided = false;
  std::vector<double> maxima;                     // row-major: maxima[p * block_count + b]
  std::vector<std::vector<double>> sorted_maxima; // per block, ascending

  std::size_t block_count() const noexcept { return blocks.size(); }
  std::size_t block_index(int ell) const {
    if (!blocks.contains(ell)) throw ValidationError("block " + std::to_string(ell) + " not in table");
    return static_cast<std::size_t>(ell - blocks.first);
  }
  double at(std::size_t perm, std::size_t block) const { return maxima[perm * block_count() + block]; }
  std::span<const double> row(std::size_t perm) const {
    return std::span<const double>(maxima).subspan(perm * block_count(), block_count());
  }
};

// Generator for permutation p: an independent stream derived from (seed, p), so results do not
// depend on how permutations are spread over workers.
inline std::mt19937_64 permutation_rng(std::uint64_t seed, std::uint64_t perm) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(perm), static_cast<std::uint32_t>(perm >> 32)};
  return std::mt19937_64(seq);
}

inline void permute_labels(std::span<const std::uint8_t> observed, std::uint64_t seed, std::uint64_t perm,
                           bool include_identity, std::vector<std::uint8_t>& out) {
  out.assign(observed.begin(), observed.end());
  if (include_identity && perm == 0) return;
  auto gen = permutation_rng(seed, perm);
  std::shuffle(out.begin(), out.end(), gen);
}

inline PermutationTable simulate_null(const Dataset& data, const ScanFamily& family, std::size_t n_perms,
                                      std::uint64_t seed, const NullOptions& opt = {}) {
  if (data.degenerate()) throw DegenerateLabels();
  if (family.range.empty()) throw EmptyBlockRange(data.size());
  if (family.n_total != data.size()) throw BlockMismatch();
  if (n_perms == 0) throw ValidationError("at least one permutation is required");

  PermutationTable table;
  table.n_perms = n_perms;
  table.blocks = family.range;
  table.seed = seed;
  table.include_identity = opt.include_identity;
  table.two_sided = opt.two_sided;
  const std::size_t nb = family.block_count();
  table.maxima.assign(n_perms * nb, 0.0);

  const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n_perms)));
  auto run = [&](unsigned w) {
    BlockMaximaEvaluator eval(family, data.ones_total(), opt.two_sided);
    std::vector<std::uint8_t> labels;
    for (std::size_t p = w; p < n_perms; p += workers) {
      permute_labels(data.labels(), seed, p, opt.include_identity, labels);
      eval.evaluate(labels, std::span<double>(table.maxima).subspan(p * nb, nb));
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }

  table.sorted_maxima.assign(nb, {});
  for (std::size_t b = 0; b < nb; ++b) {
    auto& col = table.sorted_maxima[b];
    col.reserve(n_perms);
    for (std::size_t p = 0; p < n_perms; ++p) col.push_back(table.at(p, b));
    std::sort(col.begin(), col.end());
  }
  return table;
}

inline PermutationTable simulate_null(const Dataset& data, std::size_t n_perms, std::uint64_t seed,
                                      const NullOptions& opt = {}) {
  if (data.degenerate()) throw DegenerateLabels();
  if (block_range(data.size()).empty()) throw EmptyBlockRange(data.size());
  return simulate_null(data, compile_family(data), n_perms, seed, opt);
}

// 1-based index ceil((1 - level) M) clamped to [1, M]. Values within 1e-9 above an integer
// count as that integer, so levels on the grid 1 - r/M hit index r exactly.
inline std::size_t quantile_index(double level, std::size_t m) {
  const double pos = std::ceil((1.0 - level) * static_cast<double>(m) - 1e-9);
  if (!(pos >= 1.0)) return 1;
  if (pos >= static_cast<double>(m)) return m;
  return static_cast<std::size_t>(pos);
}

// Empirical (1 - level)-quantile of the block-ell maxima.
inline double block_quantile(const PermutationTable& table, int ell, double level) {
  const auto& col = table.sorted_maxima[table.block_index(ell)];
  return col[quantile_index(level, col.size()) - 1];
}

enum class WeightScheme { ell2, ell10 };

inline double weight(WeightScheme w, int ell) {
  const double base = w == WeightScheme::ell2 ? ell : 10.0 + ell;
  return base * base;
}

inline std::string_view to_string(WeightScheme w) { return w == WeightScheme::ell2 ? "ell2" : "ell10"; }

inline WeightScheme parse_weight_scheme(std::string_view s) {
  if (s == "ell2") return WeightScheme::ell2;
  if (s == "ell10") return WeightScheme::ell10;
  throw ValidationError("unknown weight scheme '" + std::string(s) + "'");
}

struct BlockThreshold {
  int ell = 0;
  double level = 0.0;  // alpha_tilde / w(ell), capped at 1
  double q = 0.0;
};

struct CalibrationResult {
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  WeightScheme weight_scheme = WeightScheme::ell2;
  std::vector<BlockThreshold> thresholds;
  double union_rate = 0.0;
  std::size_t n_perms = 0;
  std::uint64_t seed = 0;
  BlockRange blocks;
  bool two_sided = false;
  bool floor_infeasible = false;  // even alpha_tilde = 0 failed; thresholds are +inf

  double threshold(int ell) const {
    for (const auto& t : thresholds)
      if (t.ell == ell) return t.q;
    throw ValidationError("no threshold for block " + std::to_string(ell));
  }
};

// Per-block thresholds q_ell(alpha_tilde / w(ell)).
inline std::vector<BlockThreshold> block_thresholds(const PermutationTable& table, double alpha_tilde,
                                                    WeightScheme scheme) {
  std::vector<BlockThreshold> out;
  for (int ell = table.blocks.first; ell <= table.blocks.last; ++ell) {
    BlockThreshold t;
    t.ell = ell;
    t.level = std::min(1.0, alpha_tilde / weight(scheme, ell));
    t.q = block_quantile(table, ell, t.level);
    out.push_back(t);
  }
  return out;
}

// Fraction of permutations whose maxima exceed the threshold in at least one block.
inline double union_rate(const PermutationTable& table, std::span<const BlockThreshold> thresholds) {
  const std::size_t nb = table.block_count();
  std::size_t hits = 0;
  for (std::size_t p = 0; p < table.n_perms; ++p) {
    for (std::size_t b = 0; b < nb; ++b) {
      if (table.at(p, b) > thresholds[b].q) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(table.n_perms);
}

namespace detail {

inline double union_rate_at(const PermutationTable& table, double alpha_tilde, WeightScheme scheme) {
  const auto th = block_thresholds(table, alpha_tilde, scheme);
  return union_rate(table, th);
}

}  // namespace detail

// Grid of alpha_tilde values where some block's quantile index changes: w(ell) (1 - r/M).
// union_rate is constant between consecutive grid values.
inline std::vector<double> alpha_tilde_grid(const PermutationTable& table, WeightScheme scheme,
                                            double from, double to) {
  std::vector<double> out;
  const double m = static_cast<double>(table.n_perms);
  const double top = weight(scheme, table.blocks.first);
  for (int ell = table.blocks.first; ell <= table.blocks.last; ++ell) {
    const double w = weight(scheme, ell);
    const auto r_lo = static_cast<long long>(std::floor(m * (1.0 - to / w))) - 1;
    const auto r_hi = static_cast<long long>(std::ceil(m * (1.0 - from / w))) + 1;
    for (long long r = std::max(0LL, r_lo); r <= std::min(static_cast<long long>(table.n_perms), r_hi); ++r) {
      const double g = w * (1.0 - static_cast<double>(r) / m);
      if (g >= from && g <= to && g <= top) out.push_back(g);
    }
  }
  if (from <= 0.0) out.push_back(0.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Largest grid value alpha_tilde in [0, w(first block)] whose joint union rate is <= alpha.
// Bisection narrows the continuous interval to width < 1/(4M), then the result snaps to the
// largest feasible grid value.
inline CalibrationResult solve_alpha_tilde(const PermutationTable& table, double alpha, WeightScheme scheme) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (table.n_perms == 0 || table.blocks.empty()) throw ValidationError("empty permutation table");

  CalibrationResult res;
  res.alpha = alpha;
  res.weight_scheme = scheme;
  res.n_perms = table.n_perms;
  res.seed = table.seed;
  res.blocks = table.blocks;
  res.two_sided = table.two_sided;

  auto feasible = [&](double a) { return detail::union_rate_at(table, a, scheme) <= alpha; };

  const double top = weight(scheme, table.blocks.first);
  double chosen = 0.0;
  if (feasible(top)) {
    chosen = top;
  } else if (!feasible(0.0)) {
    res.floor_infeasible = true;
    res.alpha_tilde = 0.0;
    for (int ell = table.blocks.first; ell <= table.blocks.last; ++ell)
      res.thresholds.push_back({ell, 0.0, std::numeric_limits<double>::infinity()});
    res.union_rate = union_rate(table, res.thresholds);
    return res;
  } else {
    double lo = 0.0, hi = top;
    const double tol = 1.0 / (4.0 * static_cast<double>(table.n_perms));
    while (hi - lo >= tol) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid)) lo = mid;
      else hi = mid;
    }
    // The step containing lo starts at a grid value <= lo; widen by one grid spacing.
    double widest = 0.0;
    for (int ell = table.blocks.first; ell <= table.blocks.last; ++ell)
      widest = std::max(widest, weight(scheme, ell) / static_cast<double>(table.n_perms));
    const auto grid = alpha_tilde_grid(table, scheme, std::max(0.0, lo - widest), hi);
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      if (feasible(*it)) {
        chosen = *it;
        break;
      }
    }
  }
  res.alpha_tilde = chosen;
  res.thresholds = block_thresholds(table, chosen, scheme);
  res.union_rate = union_rate(table, res.thresholds);
  return res;
}

}  // namespace bscan
