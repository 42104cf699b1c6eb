#pragma once

#include <vector>

#include "cfd/config.hpp"

namespace cfd {

/// Triangular harmonic weights w(h, nu) for h in [1, tau_max], nu in [-W, W].
///
/// h = 1 is the fundamental and carries half the peak of h = 2; from h = 2 on
/// the peak falls as 2/h. Within a harmonic the weight is peak(h) * (1 - |nu|/(W+1)).
class WeightTable {
public:
  WeightTable(int tau_max, int W);

  int tau_max() const { return tau_max_; }
  int W() const { return W_; }
  double peak(int h) const;
  double operator()(int h, int nu) const { return w_[index(h, nu)]; }
  /// Sum over every (h, nu).
  double total() const;

private:
  std::size_t index(int h, int nu) const;

  int tau_max_;
  int W_;
  std::vector<double> w_;
};

WeightTable build_weight_table(const RakeConfig& cfg);

struct CombTap {
  int offset;        // bins above the shift hypothesis
  double weight;     // summed over colliding (h, nu) pairs
  int multiplicity;  // how many (h, nu) pairs landed on this offset
};

/// Sparse comb filter for one pitch hypothesis, taps sorted by offset.
struct HarmonicComb {
  int pitch_bin = 0;
  std::vector<CombTap> taps;

  int min_offset() const { return taps.front().offset; }
  int max_offset() const { return taps.back().offset; }
};

HarmonicComb build_comb(int pitch_bin, const WeightTable& table);

}  // namespace cfd
