#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "donorline/error.hpp"
#include "donorline/units.hpp"

namespace donorline {

/// Ordered samples (abscissa, intensity, optional sigma) plus unit metadata.
struct Spectrum {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;  // empty when uncertainties are absent
  Unit x_unit = Unit::GHz;
  std::string y_label = "intensity";
  std::optional<double> temperature_k;
  std::vector<std::string> notes;

  std::size_t size() const { return x.size(); }
  bool has_sigma() const { return !sigma.empty(); }

  void validate() const {
    if (x.size() != y.size() || (!sigma.empty() && sigma.size() != x.size())) {
      throw Error(ErrorCode::InvalidArgument, "spectrum columns have different lengths");
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
      if (!(x[i] > x[i - 1])) throw Error(ErrorCode::InvalidArgument, "abscissa must be strictly increasing");
    }
    for (double s : sigma) {
      if (!(s > 0)) throw Error(ErrorCode::InvalidArgument, "uncertainties must be positive");
    }
  }

  /// Copy with the abscissa expressed in `target` (meV/GHz/K).
  Spectrum with_abscissa(Unit target) const {
    Spectrum out = *this;
    if (target == x_unit) return out;
    for (double& v : out.x) v = convert({v, x_unit}, target).value;
    out.x_unit = target;
    return out;
  }
};

}  // namespace donorline
