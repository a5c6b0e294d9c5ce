#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "fftw_lock.hpp"
#include "spectral_backend.hpp"

namespace lcs::detail {
namespace {

// Coefficients: half spectrum of the 2-D real DFT, divided by the node count,
// stored as interleaved (re, im) pairs over n1 x (n2/2 + 1) modes.
class TorusBackend final : public SpectralBackend {
 public:
  TorusBackend(int n1, int n2) : n1_(n1), n2_(n2), nh_(n2 / 2 + 1) {
    const std::size_t modes = static_cast<std::size_t>(n1_) * nh_;
    eigenvalues_.resize(2 * modes);
    parseval_.resize(2 * modes);
    const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
    for (int i = 0; i < n1_; ++i) {
      const int k1 = i <= n1_ / 2 ? i : i - n1_;
      for (int j = 0; j < nh_; ++j) {
        const int k2 = j;
        const double mu = four_pi2 * (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
        const double mult = (j == 0 || 2 * j == n2_) ? 1.0 : 2.0;
        const std::size_t s = 2 * (static_cast<std::size_t>(i) * nh_ + j);
        eigenvalues_[s] = eigenvalues_[s + 1] = mu;
        parseval_[s] = parseval_[s + 1] = mult;
      }
    }

    std::vector<double> in(static_cast<std::size_t>(n1_) * n2_);
    std::vector<std::complex<double>> out(modes);
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(n1_, n2_, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_c2r_2d(n1_, n2_, reinterpret_cast<fftw_complex*>(out.data()), in.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  ~TorusBackend() override {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t num_coefficients() const override { return eigenvalues_.size(); }
  bool full_rank() const override { return true; }

  void analysis(std::span<const double> values, std::span<double> coeffs) const override {
    std::vector<double> in(values.begin(), values.end());
    fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(coeffs.data()));
    const double scale = 1.0 / static_cast<double>(values.size());
    for (double& c : coeffs) c *= scale;
  }

  void synthesis(std::span<const double> coeffs, std::span<double> values) const override {
    std::vector<double> work(coeffs.begin(), coeffs.end());
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(work.data()), values.data());
  }

 private:
  int n1_, n2_, nh_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

std::unique_ptr<SpectralBackend> make_torus_backend(int n1, int n2) {
  return std::make_unique<TorusBackend>(n1, n2);
}

}  // namespace lcs::detail
