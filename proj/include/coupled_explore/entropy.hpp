#pragma once

// Entropy of binary occupancy cells under Shannon, Renyi and Behavioral
// (Prelec-weighted) measures, and the map-level information gain built on it.
// All values are in nats.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "coupled_explore/grid_map.hpp"

namespace coupled_explore {

enum class EntropyFamily { shannon, renyi, behavioral };

inline std::string to_string(EntropyFamily f) {
  switch (f) {
    case EntropyFamily::shannon: return "shannon";
    case EntropyFamily::renyi: return "renyi";
    case EntropyFamily::behavioral: return "behavioral";
  }
  return "?";
}

inline EntropyFamily parse_entropy_family(const std::string& s) {
  if (s == "shannon") return EntropyFamily::shannon;
  if (s == "renyi") return EntropyFamily::renyi;
  if (s == "behavioral") return EntropyFamily::behavioral;
  throw std::invalid_argument("unknown entropy family '" + s + "'");
}

// For the behavioral family beta is fixed by alpha and the outcome count
// (L = 2): beta = exp((1 - alpha) ln ln 2) = (ln 2)^(1 - alpha).
class EntropySpec {
 public:
  EntropySpec() = default;

  EntropySpec(EntropyFamily family, double alpha) : family_(family), alpha_(alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("EntropySpec: alpha must be positive");
    if (family_ == EntropyFamily::shannon) alpha_ = 1.0;
    beta_ = std::exp((1.0 - alpha_) * std::log(std::log(2.0)));
  }

  static EntropySpec shannon() { return {EntropyFamily::shannon, 1.0}; }
  static EntropySpec renyi(double alpha) { return {EntropyFamily::renyi, alpha}; }
  static EntropySpec behavioral(double alpha) { return {EntropyFamily::behavioral, alpha}; }

  EntropyFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  EntropyFamily family_{EntropyFamily::behavioral};
  double alpha_{1.0};
  double beta_{1.0};
};

inline double shannon_entropy(double p) {
  auto term = [](double q) { return q > 0.0 ? -q * std::log(q) : 0.0; };
  return term(p) + term(1.0 - p);
}

inline double renyi_entropy(double p, double alpha) {
  if (alpha == 1.0) return shannon_entropy(p);
  return std::log(std::pow(p, alpha) + std::pow(1.0 - p, alpha)) / (1.0 - alpha);
}

// -sum w(q) ln w(q) with w(q) = exp(-beta (-ln q)^alpha). Written as
// sum w(q) * e(q), e = beta (-ln q)^alpha, which stays finite when w underflows.
inline double behavioral_entropy(double p, double alpha, double beta) {
  double total = 0.0;
  for (const double q : {p, 1.0 - p}) {
    if (q <= 0.0) continue;
    const double e = beta * std::pow(-std::log(q), alpha);
    total += std::exp(-e) * e;
  }
  return total;
}

inline double cell_entropy(double p, const EntropySpec& spec) {
  switch (spec.family()) {
    case EntropyFamily::shannon: return shannon_entropy(p);
    case EntropyFamily::renyi: return renyi_entropy(p, spec.alpha());
    case EntropyFamily::behavioral: return behavioral_entropy(p, spec.alpha(), spec.beta());
  }
  return 0.0;
}

// Factorised sum over cells, accumulated in storage order so results are
// bitwise reproducible.
inline double map_entropy(const OccupancyGrid& map, const EntropySpec& spec) {
  double total = 0.0;
  for (const double p : map.probs()) total += cell_entropy(p, spec);
  return total;
}

struct GainReport {
  double current_entropy{0.0};
  double predicted_entropy{0.0};
  double gain{0.0};
  std::vector<double> per_cell;  // current - predicted, filled on request
};

class GeometryMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline GainReport information_gain(const OccupancyGrid& map_now, const OccupancyGrid& map_predicted,
                                   const EntropySpec& spec, bool keep_per_cell = false) {
  if (!(map_now.geometry() == map_predicted.geometry()))
    throw GeometryMismatch("information_gain: maps have different geometry");
  GainReport r;
  const auto& now = map_now.probs();
  const auto& pred = map_predicted.probs();
  if (keep_per_cell) r.per_cell.resize(now.size());
  for (std::size_t i = 0; i < now.size(); ++i) {
    const double a = cell_entropy(now[i], spec);
    const double b = now[i] == pred[i] ? a : cell_entropy(pred[i], spec);
    r.current_entropy += a;
    r.predicted_entropy += b;
    if (keep_per_cell) r.per_cell[i] = a - b;
  }
  r.gain = r.current_entropy - r.predicted_entropy;
  return r;
}

}  // namespace coupled_explore
