#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <vector>

namespace sprinkle {

using cplx = std::complex<double>;

/// Uniform periodic grid on [-L/2, L/2) with M nodes x_j = -L/2 + j*dx.
/// Cell j is the half-open interval [x_j, x_j + dx).
class Grid {
public:
  Grid() = default;
  Grid(double length, int cells);

  double length() const noexcept { return length_; }
  int size() const noexcept { return cells_; }
  double dx() const noexcept { return length_ / cells_; }
  double x(int j) const noexcept { return -0.5 * length_ + j * dx(); }
  std::vector<double> nodes() const;

  /// Angular wavenumber of FFT bin m (standard FFT ordering), 2*pi*m'/L with
  /// m' in {-M/2, ..., M/2-1}.
  double wavenumber(int m) const noexcept;
  std::vector<double> wavenumbers() const;

  /// Index of the cell containing position x (after wrapping onto the torus).
  int cell_of(double x) const noexcept;
  /// Wrap x into [-L/2, L/2).
  double wrap(double x) const noexcept;

  bool operator==(const Grid& other) const noexcept
  {
    return length_ == other.length_ && cells_ == other.cells_;
  }

private:
  double length_ = 1.0;
  int cells_ = 2;
};

struct GridField {
  Grid grid;
  std::vector<cplx> values;

  GridField() = default;
  explicit GridField(const Grid& g) : grid(g), values(static_cast<std::size_t>(g.size())) {}
  GridField(const Grid& g, std::vector<cplx> v);

  std::size_t size() const noexcept { return values.size(); }
  cplx& operator[](std::size_t i) noexcept { return values[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return values[i]; }

  GridField& operator+=(const GridField& o);
  GridField& operator-=(const GridField& o);
  GridField& operator*=(cplx a);
};

GridField operator+(GridField a, const GridField& b);
GridField operator-(GridField a, const GridField& b);
GridField operator*(cplx a, GridField f);

struct RealField {
  Grid grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const Grid& g) : grid(g), values(static_cast<std::size_t>(g.size())) {}
  RealField(const Grid& g, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  const double& operator[](std::size_t i) const noexcept { return values[i]; }

  GridField to_complex() const;
};

/// In-place unnormalized forward DFT and normalized inverse, backed by FFTW
/// with cached estimate-mode plans. Safe to call concurrently.
void fft_forward(std::span<cplx> data);
void fft_inverse(std::span<cplx> data);

/// Discrete inner product <f, g> = sum f_j conj(g_j) dx (linear in f).
cplx inner(const GridField& f, const GridField& g);
/// Real pairing Re<f, g>.
double real_pairing(const GridField& f, const GridField& g);
double l2_norm(const GridField& f);
double l2_norm(const RealField& f);
double linf_norm(const GridField& f);

/// H^s norm with weights <xi>^{2s} on the exact torus frequencies.
double sobolev_norm(const GridField& f, double s);
double sobolev_norm(const RealField& f, double s);

/// Spectral derivative d/dx.
GridField derivative(const GridField& f);

/// Smooth even cutoff: 1 on [-1,1], 0 outside (-2,2), monotone in between.
double chi(double x) noexcept;
/// Unnormalized bump exp(-1/(1-x^2)) on (-1,1), 0 elsewhere.
double bump(double x) noexcept;
/// Integral of bump over (-1,1), about 0.443994.
double bump_mass();

enum class Band { Low, High };

/// P_{<=N} f (Band::Low) multiplies the spectrum by chi(xi/N);
/// Band::High returns f - P_{<=N} f.
GridField littlewood_paley(const GridField& f, double N, Band side);

/// Pointwise product with chi(x/R).
GridField cutoff(const GridField& f, double R);

/// rho_k(x) = rho(x - k) periodized over the torus, rho = phi / sum_j phi(. - j).
/// Requires an integer domain length and dx <= 0.1.
RealField partition_bump(int k, const Grid& grid);

void write_csv(std::ostream& os, const GridField& f);

} // namespace sprinkle
