#pragma once

// Finite probability distributions over states or encodings.

#include "qdense/channels.hpp"

#include <cmath>

namespace qdense {

template <class Payload>
struct Ensemble {
  std::vector<double> probabilities;
  std::vector<Payload> items;

  std::size_t size() const { return items.size(); }

  /// Nonnegative weights summing to one within 1e-12, one weight per item.
  void validate() const {
    if (items.empty()) throw DimensionError("empty ensemble");
    if (probabilities.size() != items.size()) throw DimensionError("ensemble weights and items differ in length");
    double sum = 0.0;
    for (double p : probabilities) {
      if (!(p >= 0.0)) throw InvariantError("negative ensemble weight");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvariantError("ensemble weights do not sum to one");
  }
};

using StateEnsemble = Ensemble<DensityMatrix>;
using EncodingEnsemble = Ensemble<QuantumChannel>;

}  // namespace qdense
