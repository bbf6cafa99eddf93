#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "bscan/approx_enum.hpp"
#include "bscan/dataset.hpp"
#include "bscan/error.hpp"

namespace bscan {

struct MixtureComponent {
  double weight = 0.25;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double sd = 1.0;
};

// Location mixture plus region-dependent label rates. Precedence: box, then strip, then base.
struct SynthConfig {
  std::size_t n_points = 1000;
  double base_p = 0.4;
  double strip_x_min = 5.0;
  double strip_p = 0.6;
  Box box{1.0, 2.0, 3.0, 5.0};
  double box_p = 0.75;
  std::vector<MixtureComponent> mixture{{0.25, 0.0, 0.0, 1.0}, {0.25, 0.0, 5.0, 1.0},
                                        {0.25, 5.0, 0.0, 1.0}, {0.25, 6.0, 4.0, 1.0}};
  std::uint64_t seed = 1;

  void validate() const {
    if (n_points == 0) throw ValidationError("n_points must be positive");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(base_p) || !prob(strip_p) || !prob(box_p))
      throw ValidationError("label probabilities must lie in [0, 1]");
    if (mixture.empty()) throw ValidationError("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : mixture) {
      if (!(c.weight > 0.0)) throw ValidationError("mixture weights must be positive");
      if (!(c.sd > 0.0)) throw ValidationError("mixture standard deviations must be positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixture weights must sum to 1");
  }

  double label_rate(double x, double y) const noexcept {
    if (box.contains_point(x, y)) return box_p;
    if (x >= strip_x_min) return strip_p;
    return base_p;
  }
};

// Points in generation order; deterministic given the config.
inline std::vector<LabeledPoint> synthesize(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 gen(cfg.seed);
  std::vector<double> weights;
  for (const auto& c : cfg.mixture) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<LabeledPoint> out;
  out.reserve(cfg.n_points);
  for (std::size_t u = 0; u < cfg.n_points; ++u) {
    const auto& c = cfg.mixture[pick(gen)];
    LabeledPoint p;
    p.x = c.mean_x + c.sd * gauss(gen);
    p.y = c.mean_y + c.sd * gauss(gen);
    p.label = unif(gen) < cfg.label_rate(p.x, p.y) ? 1 : 0;
    out.push_back(p);
  }
  return out;
}

// Same locations as the default experiment with i.i.d. Bernoulli(p) labels.
inline std::vector<LabeledPoint> synthesize_null(std::size_t n, double p, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_points = n;
  cfg.base_p = cfg.strip_p = cfg.box_p = p;
  cfg.seed = seed;
  return synthesize(cfg);
}

}  // namespace bscan
