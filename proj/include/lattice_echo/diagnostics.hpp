#pragma once

#include <string>

#include "lattice_echo/config.hpp"

namespace lattice_echo {

// Numerical verification of the supporting results: boundary-exchange
// ratios along a radius ladder, the Gauss-type counting bound, the Wiener
// correlations of the centered noise factor, and the Hellinger-affinity
// inequality for windowed periodograms. Each suite carries a verdict at
// its documented tolerance; the boundary suite reports without a verdict
// when the noise lacks the moment condition (cauchy).
struct LemmaReport {
  std::string json;
  bool pass = false;
};

LemmaReport verify_lemmas(const RunConfig& config);

}  // namespace lattice_echo
