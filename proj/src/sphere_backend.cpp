#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "fftw_lock.hpp"
#include "spectral_backend.hpp"

namespace lcs::detail {

std::size_t tri_index(int l, int m, int lmax) {
  const std::size_t mm = static_cast<std::size_t>(m);
  return mm * static_cast<std::size_t>(lmax + 1) - mm * (mm - 1) / 2 + static_cast<std::size_t>(l - m);
}

SphereQuadrature gauss_legendre(int n) {
  SphereQuadrature q;
  q.cos_theta.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // one more evaluation at the converged root for the weight
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.cos_theta[i] = x;
    q.cos_theta[n - 1 - i] = -x;
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  return q;
}

std::vector<double> legendre_table(int lmax, double x) {
  std::vector<double> p(tri_index(lmax, lmax, lmax) + 1, 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  double pmm = 1.0;
  for (int m = 0; m <= lmax; ++m) {
    if (m == 1) pmm *= std::sqrt(3.0) * s;
    if (m >= 2) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    double prev = 0.0, cur = pmm;
    p[tri_index(m, m, lmax)] = cur;
    for (int l = m + 1; l <= lmax; ++l) {
      const double a = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / ((l - m) * static_cast<double>(l + m)));
      const double b = l - m - 1 > 0
                           ? std::sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0) /
                                       ((l - m) * static_cast<double>(l + m) * (2.0 * l - 3.0)))
                           : 0.0;
      const double next = a * x * cur - b * prev;
      prev = cur;
      cur = next;
      p[tri_index(l, m, lmax)] = cur;
    }
  }
  return p;
}

namespace {

constexpr int kScaleBits = 400;

// Real spherical harmonics Pbar_lm(cos theta) {cos, sin}(m phi), orthonormal
// on the unit-area sphere, triangular truncation l <= nlat - 1. The Legendre
// recurrence is run on the fly with an exponent-tracked starting value so the
// sectoral terms sin^m(theta) do not underflow at high degree.
class SphereBackend final : public SpectralBackend {
 public:
  SphereBackend(int nlat, int nlon, const SphereQuadrature& q)
      : nlat_(nlat), nlon_(nlon), lmax_(nlat - 1), nh_(nlon / 2 + 1), x_(q.cos_theta) {
    const std::size_t ntri = tri_index(lmax_, lmax_, lmax_) + 1;
    eigenvalues_.resize(2 * ntri);
    parseval_.assign(2 * ntri, 1.0);
    a_.resize(ntri);
    b_.resize(ntri);
    for (int m = 0; m <= lmax_; ++m) {
      for (int l = m; l <= lmax_; ++l) {
        const std::size_t t = tri_index(l, m, lmax_);
        const double mu = 4.0 * std::numbers::pi * l * (l + 1.0);
        eigenvalues_[2 * t] = eigenvalues_[2 * t + 1] = mu;
        if (l > m) {
          a_[t] = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / ((l - m) * static_cast<double>(l + m)));
          b_[t] = l - m - 1 > 0 ? std::sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0) /
                                            ((l - m) * static_cast<double>(l + m) * (2.0 * l - 3.0)))
                                : 0.0;
        }
      }
    }
    sin_.resize(nlat_);
    fac_.resize(nlat_);
    for (int i = 0; i < nlat_; ++i) {
      sin_[i] = std::sqrt(std::max(0.0, 1.0 - x_[i] * x_[i]));
      fac_[i] = q.weights[i] / (2.0 * nlon_);
    }
    diag_.resize(lmax_ + 1);
    diag_[0] = 1.0;
    if (lmax_ >= 1) diag_[1] = std::sqrt(3.0);
    for (int m = 2; m <= lmax_; ++m) diag_[m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m));

    std::vector<double> in(static_cast<std::size_t>(nlat_) * nlon_);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(nlat_) * nh_);
    int len[1] = {nlon_};
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_many_dft_r2c(1, len, nlat_, in.data(), nullptr, 1, nlon_,
                                      reinterpret_cast<fftw_complex*>(out.data()), nullptr, 1, nh_,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_many_dft_c2r(1, len, nlat_, reinterpret_cast<fftw_complex*>(out.data()), nullptr,
                                       1, nh_, in.data(), nullptr, 1, nlon_, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  ~SphereBackend() override {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t num_coefficients() const override { return eigenvalues_.size(); }
  bool full_rank() const override { return false; }

  void analysis(std::span<const double> values, std::span<double> coeffs) const override {
    std::vector<double> in(values.begin(), values.end());
    std::vector<std::complex<double>> ring(static_cast<std::size_t>(nlat_) * nh_);
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(ring.data()));
    std::fill(coeffs.begin(), coeffs.end(), 0.0);

    std::vector<double> pmm(nlat_ / 2, 1.0);
    std::vector<int> pexp(nlat_ / 2, 0);
    for (int m = 0; m <= lmax_; ++m) {
      const std::size_t base = tri_index(m, m, lmax_);
      for (int i = 0; i < nlat_ / 2; ++i) {
        advance_sectoral(m, i, pmm[i], pexp[i]);
        const int is = nlat_ - 1 - i;
        const std::complex<double> un = ring[static_cast<std::size_t>(i) * nh_ + m] * fac_[i];
        const std::complex<double> us = ring[static_cast<std::size_t>(is) * nh_ + m] * fac_[is];
        const double ce = un.real() + us.real(), co = un.real() - us.real();
        const double se = -(un.imag() + us.imag()), so = -(un.imag() - us.imag());
        const double x = x_[i];

        double prev = 0.0, cur = pmm[i];
        int e = pexp[i];
        double sc = e > -1000 ? std::ldexp(1.0, e) : 0.0;
        for (int l = m; l <= lmax_; ++l) {
          if (l > m) {
            const std::size_t t = base + (l - m);
            const double next = a_[t] * x * cur - b_[t] * prev;
            prev = cur;
            cur = next;
            if (e < 0 && std::abs(cur) > 0x1p400) {
              cur = std::ldexp(cur, -kScaleBits);
              prev = std::ldexp(prev, -kScaleBits);
              e += kScaleBits;
              sc = e > -1000 ? std::ldexp(1.0, e) : 0.0;
            }
          }
          if (sc == 0.0) continue;
          const double p = cur * sc;
          const bool even = ((l + m) & 1) == 0;
          const std::size_t t = 2 * (base + (l - m));
          coeffs[t] += p * (even ? ce : co);
          coeffs[t + 1] += p * (even ? se : so);
        }
      }
      if (m == 0) coeffs[2 * base + 1] = 0.0;
    }
  }

  void synthesis(std::span<const double> coeffs, std::span<double> values) const override {
    std::vector<std::complex<double>> ring(static_cast<std::size_t>(nlat_) * nh_, 0.0);
    std::vector<double> pmm(nlat_ / 2, 1.0);
    std::vector<int> pexp(nlat_ / 2, 0);
    for (int m = 0; m <= lmax_; ++m) {
      const std::size_t base = tri_index(m, m, lmax_);
      for (int i = 0; i < nlat_ / 2; ++i) {
        advance_sectoral(m, i, pmm[i], pexp[i]);
        const double x = x_[i];
        double ce = 0.0, co = 0.0, se = 0.0, so = 0.0;
        double prev = 0.0, cur = pmm[i];
        int e = pexp[i];
        double sc = e > -1000 ? std::ldexp(1.0, e) : 0.0;
        for (int l = m; l <= lmax_; ++l) {
          if (l > m) {
            const std::size_t t = base + (l - m);
            const double next = a_[t] * x * cur - b_[t] * prev;
            prev = cur;
            cur = next;
            if (e < 0 && std::abs(cur) > 0x1p400) {
              cur = std::ldexp(cur, -kScaleBits);
              prev = std::ldexp(prev, -kScaleBits);
              e += kScaleBits;
              sc = e > -1000 ? std::ldexp(1.0, e) : 0.0;
            }
          }
          if (sc == 0.0) continue;
          const double p = cur * sc;
          const std::size_t t = 2 * (base + (l - m));
          if (((l + m) & 1) == 0) {
            ce += coeffs[t] * p;
            se += coeffs[t + 1] * p;
          } else {
            co += coeffs[t] * p;
            so += coeffs[t + 1] * p;
          }
        }
        const int is = nlat_ - 1 - i;
        const double half = m == 0 ? 1.0 : 0.5;
        ring[static_cast<std::size_t>(i) * nh_ + m] = {half * (ce + co), -half * (se + so)};
        ring[static_cast<std::size_t>(is) * nh_ + m] = {half * (ce - co), -half * (se - so)};
        if (m == 0) {
          ring[static_cast<std::size_t>(i) * nh_].imag(0.0);
          ring[static_cast<std::size_t>(is) * nh_].imag(0.0);
        }
      }
    }
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(ring.data()), values.data());
  }

 private:
  // Pbar_mm at latitude i from Pbar_{m-1,m-1}, as mantissa * 2^exponent.
  void advance_sectoral(int m, int i, double& mant, int& exponent) const {
    if (m == 0) {
      mant = 1.0;
      exponent = 0;
      return;
    }
    mant *= diag_[m] * sin_[i];
    if (mant != 0.0 && mant < 0x1p-400) {
      mant = std::ldexp(mant, kScaleBits);
      exponent -= kScaleBits;
    }
  }

  int nlat_, nlon_, lmax_, nh_;
  std::vector<double> x_, sin_, fac_, diag_;
  std::vector<double> a_, b_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

std::unique_ptr<SpectralBackend> make_sphere_backend(int nlat, int nlon, const SphereQuadrature& q) {
  return std::make_unique<SphereBackend>(nlat, nlon, q);
}

}  // namespace lcs::detail
