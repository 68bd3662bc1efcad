#pragma once

#include <memory>
#include <string_view>
#include <vector>

namespace sizerforge {

/// Matérn nu = 5/2 with unit signal variance on standardised targets.
double matern52(double r, double lengthscale);

struct GpOptions {
  /// Observation noise on the standardised scale; escalated x10 up to 1e-2
  /// when the Cholesky factorisation fails.
  double noise = 1e-8;
  /// Candidate isotropic lengthscales; the one with the highest log
  /// marginal likelihood is used. A single entry disables the search.
  std::vector<double> lengthscales = {0.1, 0.2, 0.3, 0.5, 0.8, 1.2};
};

struct Prediction {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Exact GP regression on points in [0, 1]^d. Throws Error{SingularKernel}.
class GaussianProcess {
 public:
  GaussianProcess(std::vector<std::vector<double>> x, std::vector<double> y, GpOptions options = {});
  ~GaussianProcess();
  GaussianProcess(GaussianProcess&&) noexcept;
  GaussianProcess& operator=(GaussianProcess&&) noexcept;

  Prediction predict(const std::vector<double>& x) const;

  double lengthscale() const noexcept;
  double noise() const noexcept;
  std::size_t size() const noexcept;
  double y_mean() const noexcept;
  double y_scale() const noexcept;

  /// Incremental posterior over a fixed candidate set. condition() adds a
  /// (fantasy) observation with an O(n * candidates) rank-1 update, which
  /// is what the constant-liar batch selection uses.
  class CandidateSet {
   public:
    ~CandidateSet();
    CandidateSet(CandidateSet&&) noexcept;
    CandidateSet& operator=(CandidateSet&&) noexcept;

    std::size_t size() const noexcept;
    Prediction at(std::size_t i) const;
    void condition(std::size_t candidate, double y);

   private:
    friend class GaussianProcess;
    struct Impl;
    explicit CandidateSet(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
  };

  CandidateSet candidates(const std::vector<std::vector<double>>& points) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class Acquisition { EI, UCB, LCB, PI };

std::string_view to_string(Acquisition a);
/// Accepts EI/UCB/LCB/PI in any case; throws Error{InvalidParameter}.
Acquisition acquisition_from_string(std::string_view s);

/// Maximisation form. EI and PI use `best + xi` as the incumbent; UCB and
/// LCB are both mean + weight * stddev (optimistic bound).
double acquisition_value(Acquisition kind, const Prediction& p, double best, double weight);

}  // namespace sizerforge
