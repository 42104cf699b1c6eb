#include "cfd/comb.hpp"

#include <cstdlib>
#include <map>
#include <string>

namespace cfd {

WeightTable::WeightTable(int tau_max, int W) : tau_max_(tau_max), W_(W) {
  if (tau_max < 2) throw InvalidInput("tau_max must be >= 2, got " + std::to_string(tau_max));
  if (W < 0) throw InvalidInput("W must be >= 0, got " + std::to_string(W));
  w_.resize(static_cast<std::size_t>(tau_max) * static_cast<std::size_t>(2 * W + 1));
  for (int h = 1; h <= tau_max; ++h)
    for (int nu = -W; nu <= W; ++nu)
      w_[index(h, nu)] = peak(h) * (1.0 - static_cast<double>(std::abs(nu)) / static_cast<double>(W + 1));
}

double WeightTable::peak(int h) const {
  if (h == 1) return 0.5;
  return 2.0 / static_cast<double>(h);
}

double WeightTable::total() const {
  double s = 0.0;
  for (double w : w_) s += w;
  return s;
}

std::size_t WeightTable::index(int h, int nu) const {
  return static_cast<std::size_t>(h - 1) * static_cast<std::size_t>(2 * W_ + 1) + static_cast<std::size_t>(nu + W_);
}

WeightTable build_weight_table(const RakeConfig& cfg) { return WeightTable(cfg.tau_max, cfg.W); }

HarmonicComb build_comb(int pitch_bin, const WeightTable& table) {
  if (pitch_bin < 1) throw InvalidInput("pitch_bin must be >= 1, got " + std::to_string(pitch_bin));
  std::map<int, CombTap> merged;
  for (int h = 1; h <= table.tau_max(); ++h) {
    for (int nu = -table.W(); nu <= table.W(); ++nu) {
      const int off = h * pitch_bin + nu;
      auto [it, fresh] = merged.try_emplace(off, CombTap{off, 0.0, 0});
      it->second.weight += table(h, nu);
      it->second.multiplicity += 1;
    }
  }
  HarmonicComb comb;
  comb.pitch_bin = pitch_bin;
  comb.taps.reserve(merged.size());
  for (auto& [off, tap] : merged) comb.taps.push_back(tap);
  return comb;
}

}  // namespace cfd
