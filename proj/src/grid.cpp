#include "capflow/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <string>

#include "capflow/errors.hpp"

namespace capflow {

Grid::Grid(int dim, double length, int points) : dim_(dim), length_(length), points_(points) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("grid length must be positive");
  if (points < 8 || (points & (points - 1)) != 0) throw InvalidArgument("grid points must be a power of two >= 8");
  h_ = length / points;
  if (h_ > 0.25) throw InvalidArgument("grid spacing exceeds 1/4");
  cell_measure_ = dim == 1 ? h_ : h_ * h_;
  cells_ = dim == 1 ? static_cast<std::size_t>(points) : static_cast<std::size_t>(points) * points;
  space_ = MeasureSpace::uniform(cells_, cell_measure_);
}

std::array<int, 2> Grid::axes(std::size_t c) const {
  if (dim_ == 1) return {static_cast<int>(c), 0};
  return {static_cast<int>(c / points_), static_cast<int>(c % points_)};
}

std::size_t Grid::cell(int i0, int i1) const {
  auto w = [this](int i) { return ((i % points_) + points_) % points_; };
  if (dim_ == 1) return static_cast<std::size_t>(w(i0));
  return static_cast<std::size_t>(w(i0)) * points_ + w(i1);
}

std::array<double, 2> Grid::point(std::size_t c) const {
  auto a = axes(c);
  return {center(a[0]), dim_ == 2 ? center(a[1]) : 0.0};
}

int Grid::wrap_offset(int a, int b) const {
  int d = std::abs(a - b) % points_;
  return std::min(d, points_ - d);
}

double Grid::periodic_distance(std::size_t a, std::size_t b) const {
  auto pa = axes(a), pb = axes(b);
  double d0 = wrap_offset(pa[0], pb[0]) * h_;
  double d1 = dim_ == 2 ? wrap_offset(pa[1], pb[1]) * h_ : 0.0;
  return std::hypot(d0, d1);
}

GridPtr make_grid(int dim, double length, int points) { return std::make_shared<const Grid>(dim, length, points); }

double set_diameter(const Grid& g, const SetMask& set) {
  if (set.size() != g.cells()) throw InvalidArgument("mask does not match grid");
  if (set.is_empty()) return 0.0;
  // Only the leftmost and rightmost cell of each row can realize the diameter.
  std::map<int, std::pair<int, int>> rows;
  for (std::size_t c : set.indices()) {
    auto a = g.axes(c);
    auto [it, fresh] = rows.try_emplace(a[0], a[1], a[1]);
    if (!fresh) {
      it->second.first = std::min(it->second.first, a[1]);
      it->second.second = std::max(it->second.second, a[1]);
    }
  }
  std::vector<std::array<int, 2>> ext;
  for (auto& [r, span] : rows) {
    ext.push_back({r, span.first});
    if (span.second != span.first) ext.push_back({r, span.second});
  }
  const double h = g.spacing();
  double best = 0.0;
  for (std::size_t i = 0; i < ext.size(); ++i)
    for (std::size_t j = i; j < ext.size(); ++j) {
      double d0 = (std::abs(ext[i][0] - ext[j][0]) + 1) * h;
      double d1 = g.dim() == 2 ? (std::abs(ext[i][1] - ext[j][1]) + 1) * h : 0.0;
      best = std::max(best, std::hypot(d0, d1));
    }
  return best;
}

void validate_box(const Grid& g, double support_diameter, double margin) {
  if (g.length() < support_diameter + margin)
    throw InvalidArgument("box length " + std::to_string(g.length()) + " is below support diameter " +
                          std::to_string(support_diameter) + " plus margin " + std::to_string(margin));
}

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
 public:
  const Plans& get(int dim, int n) {
    const long key = static_cast<long>(dim) * 1000000 + n;
    {
      std::shared_lock lock(mutex_);
      auto it = plans_.find(key);
      if (it != plans_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t real = dim == 1 ? n : static_cast<std::size_t>(n) * n;
    const std::size_t half = dim == 1 ? n / 2 + 1 : static_cast<std::size_t>(n) * (n / 2 + 1);
    double* in = fftw_alloc_real(real);
    fftw_complex* out = fftw_alloc_complex(half);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p;
    if (dim == 1) {
      p.forward = fftw_plan_dft_r2c_1d(n, in, out, flags);
      p.backward = fftw_plan_dft_c2r_1d(n, out, in, flags);
    } else {
      p.forward = fftw_plan_dft_r2c_2d(n, n, in, out, flags);
      p.backward = fftw_plan_dft_c2r_2d(n, n, out, in, flags);
    }
    fftw_free(in);
    fftw_free(out);
    return plans_.emplace(key, p).first->second;
  }

 private:
  std::shared_mutex mutex_;
  std::map<long, Plans> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

std::size_t half_size(const Grid& g) {
  const std::size_t n = g.points();
  return g.dim() == 1 ? n / 2 + 1 : n * (n / 2 + 1);
}

void forward(const Grid& g, std::vector<double>& in, std::vector<std::complex<double>>& out) {
  out.resize(half_size(g));
  const auto& p = plan_cache().get(g.dim(), g.points());
  fftw_execute_dft_r2c(p.forward, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void backward(const Grid& g, std::vector<std::complex<double>>& in, std::vector<double>& out) {
  out.resize(g.cells());
  const auto& p = plan_cache().get(g.dim(), g.points());
  fftw_execute_dft_c2r(p.backward, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

double KernelSpec::at(const Grid& g, int d0, int d1) const { return kernel[g.cell(d0, d1)]; }

KernelSpec bessel_kernel(const Grid& g, double alpha, double max_clipped) {
  if (!(alpha > 0.0) || alpha > g.dim()) throw InvalidArgument("alpha must lie in (0, n]");
  const int n = g.points();
  const double w = 2.0 * std::numbers::pi / g.length();
  KernelSpec k;
  k.alpha = alpha;
  k.symbol.resize(half_size(g));
  const int last = n / 2 + 1;
  auto sym = [&](double xi2) { return std::pow(1.0 + xi2, -alpha / 2.0); };
  if (g.dim() == 1) {
    for (int j = 0; j < last; ++j) k.symbol[j] = sym(std::pow(w * j, 2));
  } else {
    for (int a = 0; a < n; ++a) {
      const double x0 = w * signed_frequency(a, n);
      for (int b = 0; b < last; ++b) k.symbol[static_cast<std::size_t>(a) * last + b] = sym(x0 * x0 + std::pow(w * b, 2));
    }
  }

  std::vector<std::complex<double>> spec(k.symbol.begin(), k.symbol.end());
  backward(g, spec, k.kernel);
  const double vol = std::pow(g.length(), g.dim());
  for (auto& v : k.kernel) v /= vol;

  // Exact evenness, then clipping of the negative ringing.
  std::vector<double> even(k.kernel.size());
  for (std::size_t c = 0; c < even.size(); ++c) {
    auto a = g.axes(c);
    even[c] = 0.5 * (k.kernel[c] + k.kernel[g.cell(-a[0], -a[1])]);
  }
  double neg = 0.0, mass = 0.0;
  for (auto& v : even) {
    if (v < 0.0) {
      neg -= v;
      v = 0.0;
    }
    mass += v;
  }
  k.clipped_mass = neg * g.cell_measure();
  if (k.clipped_mass > max_clipped)
    throw InvalidArgument("kernel clipping removed mass " + std::to_string(k.clipped_mass) +
                          "; grid too coarse for alpha " + std::to_string(alpha));
  mass *= g.cell_measure();
  for (auto& v : even) v /= mass;
  auto wrapped = kernel_from_values(g, std::move(even));
  k.kernel = std::move(wrapped.kernel);
  k.spectrum = std::move(wrapped.spectrum);
  return k;
}

KernelSpec kernel_from_values(const Grid& g, std::vector<double> kernel) {
  if (kernel.size() != g.cells()) throw InvalidArgument("kernel does not match grid");
  KernelSpec k;
  k.kernel = std::move(kernel);
  std::vector<double> tmp(k.kernel);
  std::vector<std::complex<double>> out;
  forward(g, tmp, out);
  k.spectrum.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) k.spectrum[i] = out[i].real() * g.cell_measure();
  return k;
}

std::vector<double> convolve_raw(const Grid& g, const KernelSpec& k, std::span<const double> f) {
  if (f.size() != g.cells() || k.spectrum.size() != half_size(g)) throw InvalidArgument("field and kernel grids differ");
  std::vector<double> in(f.begin(), f.end());
  std::vector<std::complex<double>> spec;
  forward(g, in, spec);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= k.spectrum[i];
  std::vector<double> out;
  backward(g, spec, out);
  const double scale = 1.0 / static_cast<double>(g.cells());
  for (auto& v : out) v *= scale;
  return out;
}

Field convolve(const Grid& g, const KernelSpec& k, const Field& f, double* clipped) {
  if (f.size() != g.cells()) throw InvalidArgument("field does not live on this grid");
  auto out = convolve_raw(g, k, f.values());
  double removed = 0.0;
  const bool nonneg = std::all_of(f.values().begin(), f.values().end(), [](double v) { return v >= 0.0; });
  if (nonneg) {
    const double tol = 1e-12 * std::max(1.0, f.sup_abs());
    for (auto& v : out) {
      if (v < 0.0) {
        if (v < -tol) throw InvalidArgument("convolution of a nonnegative field went negative beyond round-off");
        removed -= v;
        v = 0.0;
      }
    }
  }
  if (clipped) *clipped = removed * g.cell_measure();
  return Field(g.space(), std::move(out));
}

}  // namespace capflow
