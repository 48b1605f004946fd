#pragma once

#include "sprinkle/grid.hpp"

#include <map>
#include <span>
#include <vector>

namespace sprinkle::detail {

/// Exact free Schrodinger flow e^{i tau d_xx} applied in Fourier space, with
/// optional 2/3-rule truncation. Multipliers are cached per step length.
class FreeFlow {
public:
  FreeFlow(const Grid& grid, bool dealias) : grid_(grid), dealias_(dealias) {}

  void apply(std::span<cplx> values, double tau)
  {
    const auto& mult = multiplier(tau);
    fft_forward(values);
    for (std::size_t m = 0; m < values.size(); ++m)
      values[m] *= mult[m];
    fft_inverse(values);
  }

private:
  const std::vector<cplx>& multiplier(double tau)
  {
    auto it = cache_.find(tau);
    if (it != cache_.end())
      return it->second;
    if (cache_.size() > 64)
      cache_.clear();
    const int M = grid_.size();
    std::vector<cplx> mult(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      const int shifted = m < M / 2 ? m : m - M;
      const double k = grid_.wavenumber(m);
      const bool kept = !dealias_ || 3 * std::abs(shifted) <= M;
      mult[static_cast<std::size_t>(m)] = kept ? std::polar(1.0, -k * k * tau) : cplx(0.0);
    }
    return cache_.emplace(tau, std::move(mult)).first->second;
  }

  Grid grid_;
  bool dealias_;
  std::map<double, std::vector<cplx>> cache_;
};

} // namespace sprinkle::detail
