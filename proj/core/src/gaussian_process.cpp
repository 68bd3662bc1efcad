#include "sizerforge/gaussian_process.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "sizerforge/error.hpp"

namespace sizerforge {

namespace {

constexpr double kSqrt5 = 2.23606797749979;
constexpr double kMaxNoise = 1e-2;

// Row-major so row(i).data() is contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double matern52(double r, double lengthscale) {
  const double a = kSqrt5 * r / lengthscale;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

struct GaussianProcess::Impl {
  RowMatrix x;  // n x d
  Eigen::VectorXd y;  // standardised
  double y_mean = 0.0;
  double y_scale = 1.0;
  double lengthscale = 0.3;
  double noise = 1e-6;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;

  double k(const double* a, const double* b) const {
    return matern52(distance(a, b, static_cast<std::size_t>(x.cols())), lengthscale);
  }

  Eigen::VectorXd k_star(const double* p) const {
    Eigen::VectorXd ks(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) ks(i) = k(p, x.row(i).data());
    return ks;
  }
};

GaussianProcess::GaussianProcess(std::vector<std::vector<double>> x, std::vector<double> y, GpOptions options)
    : impl_(std::make_unique<Impl>()) {
  if (x.empty() || x.size() != y.size()) {
    throw Error(ErrorCode::InvalidParameter, "GP needs matching, non-empty inputs");
  }
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(x.front().size());
  RowMatrix xm(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) xm(i, k) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  Impl& m = *impl_;
  m.x = xm;

  double mu = 0.0;
  for (double v : y) mu += v;
  mu /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mu) * (v - mu);
  var /= static_cast<double>(y.size());
  m.y_mean = mu;
  m.y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.y(i) = (y[static_cast<std::size_t>(i)] - mu) / m.y_scale;

  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      dist(i, j) = dist(j, i) = distance(xm.row(i).data(), xm.row(j).data(), static_cast<std::size_t>(d));
    }
  }

  double best_lml = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double ls : options.lengthscales) {
    double noise = options.noise;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
      Eigen::MatrixXd kmat = dist.unaryExpr([ls](double r) { return matern52(r, ls); });
      kmat.diagonal().array() += noise;
      llt.compute(kmat);
      if (llt.info() == Eigen::Success) break;
      noise = noise > 0.0 ? noise * 10.0 : 1e-10;
      if (noise > kMaxNoise) break;
    }
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd alpha = llt.solve(m.y);
    const Eigen::MatrixXd l = llt.matrixL();
    const double lml = -0.5 * m.y.dot(alpha) - l.diagonal().array().log().sum();
    if (!any || lml > best_lml) {
      any = true;
      best_lml = lml;
      m.lengthscale = ls;
      m.noise = noise;
      m.llt = llt;
      m.alpha = alpha;
    }
  }
  if (!any) throw Error(ErrorCode::SingularKernel, "kernel matrix not positive definite up to jitter 1e-2");
}

GaussianProcess::~GaussianProcess() = default;
GaussianProcess::GaussianProcess(GaussianProcess&&) noexcept = default;
GaussianProcess& GaussianProcess::operator=(GaussianProcess&&) noexcept = default;

Prediction GaussianProcess::predict(const std::vector<double>& p) const {
  const Impl& m = *impl_;
  const Eigen::VectorXd ks = m.k_star(p.data());
  const double mean = ks.dot(m.alpha);
  const Eigen::VectorXd v = m.llt.matrixL().solve(ks);
  const double var = std::max(0.0, 1.0 - v.squaredNorm());
  return {mean * m.y_scale + m.y_mean, std::sqrt(var) * m.y_scale};
}

double GaussianProcess::lengthscale() const noexcept { return impl_->lengthscale; }
double GaussianProcess::noise() const noexcept { return impl_->noise; }
std::size_t GaussianProcess::size() const noexcept { return static_cast<std::size_t>(impl_->x.rows()); }
double GaussianProcess::y_mean() const noexcept { return impl_->y_mean; }
double GaussianProcess::y_scale() const noexcept { return impl_->y_scale; }

struct GaussianProcess::CandidateSet::Impl {
  RowMatrix points;     // C x d
  Eigen::MatrixXd v;    // L^{-1} K(X, candidates), n x C
  Eigen::VectorXd beta; // L^{-1} y
  Eigen::VectorXd mean; // standardised posterior mean per candidate
  Eigen::VectorXd var;  // posterior variance per candidate
  double lengthscale = 0.3;
  double noise = 1e-6;
  double y_mean = 0.0;
  double y_scale = 1.0;
};

GaussianProcess::CandidateSet::CandidateSet(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
GaussianProcess::CandidateSet::~CandidateSet() = default;
GaussianProcess::CandidateSet::CandidateSet(CandidateSet&&) noexcept = default;
GaussianProcess::CandidateSet& GaussianProcess::CandidateSet::operator=(CandidateSet&&) noexcept = default;

std::size_t GaussianProcess::CandidateSet::size() const noexcept {
  return static_cast<std::size_t>(impl_->points.rows());
}

Prediction GaussianProcess::CandidateSet::at(std::size_t i) const {
  const auto j = static_cast<Eigen::Index>(i);
  return {impl_->mean(j) * impl_->y_scale + impl_->y_mean, std::sqrt(std::max(0.0, impl_->var(j))) * impl_->y_scale};
}

void GaussianProcess::CandidateSet::condition(std::size_t candidate, double y) {
  Impl& c = *impl_;
  const auto j = static_cast<Eigen::Index>(candidate);
  const auto d = static_cast<std::size_t>(c.points.cols());
  const Eigen::VectorXd l = c.v.col(j);
  const double diag = 1.0 + c.noise - l.squaredNorm();
  if (!(diag > 0.0)) throw Error(ErrorCode::SingularKernel, "fantasy observation duplicates a conditioned point");
  const double s = std::sqrt(diag);
  const double y_std = (y - c.y_mean) / c.y_scale;
  const double beta_new = (y_std - l.dot(c.beta)) / s;

  const Eigen::Index cands = c.points.rows();
  Eigen::RowVectorXd row(cands);
  const Eigen::RowVectorXd lv = l.transpose() * c.v;
  for (Eigen::Index k = 0; k < cands; ++k) {
    const double kk = matern52(distance(c.points.row(j).data(), c.points.row(k).data(), d), c.lengthscale);
    row(k) = (kk - lv(k)) / s;
  }
  const Eigen::Index n = c.v.rows();
  c.v.conservativeResize(n + 1, Eigen::NoChange);
  c.v.row(n) = row;
  c.beta.conservativeResize(n + 1);
  c.beta(n) = beta_new;
  c.mean += row.transpose() * beta_new;
  c.var -= row.transpose().cwiseAbs2();
}

GaussianProcess::CandidateSet GaussianProcess::candidates(const std::vector<std::vector<double>>& points) const {
  const Impl& m = *impl_;
  auto c = std::make_unique<CandidateSet::Impl>();
  const auto cands = static_cast<Eigen::Index>(points.size());
  const auto d = m.x.cols();
  c->points.resize(cands, d);
  for (Eigen::Index i = 0; i < cands; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) c->points(i, k) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  Eigen::MatrixXd kx(m.x.rows(), cands);
  for (Eigen::Index i = 0; i < cands; ++i) kx.col(i) = m.k_star(c->points.row(i).data());
  c->v = m.llt.matrixL().solve(kx);
  c->beta = m.llt.matrixL().solve(m.y);
  c->mean = c->v.transpose() * c->beta;
  c->var = Eigen::VectorXd::Ones(cands) - c->v.colwise().squaredNorm().transpose();
  c->lengthscale = m.lengthscale;
  c->noise = m.noise;
  c->y_mean = m.y_mean;
  c->y_scale = m.y_scale;
  return CandidateSet(std::move(c));
}

std::string_view to_string(Acquisition a) {
  switch (a) {
    case Acquisition::EI: return "EI";
    case Acquisition::UCB: return "UCB";
    case Acquisition::LCB: return "LCB";
    case Acquisition::PI: return "PI";
  }
  return "EI";
}

Acquisition acquisition_from_string(std::string_view s) {
  std::string up;
  for (char ch : s) up += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (auto a : {Acquisition::EI, Acquisition::UCB, Acquisition::LCB, Acquisition::PI}) {
    if (to_string(a) == up) return a;
  }
  throw Error(ErrorCode::InvalidParameter, "acquisition_function must be one of EI, UCB, LCB, PI (got '" +
                                               std::string(s) + "')");
}

double acquisition_value(Acquisition kind, const Prediction& p, double best, double weight) {
  switch (kind) {
    case Acquisition::UCB:
    case Acquisition::LCB: return p.mean + weight * p.stddev;
    case Acquisition::EI: {
      const double imp = p.mean - best - weight;
      if (p.stddev <= 0.0) return std::max(imp, 0.0);
      const double z = imp / p.stddev;
      return imp * normal_cdf(z) + p.stddev * normal_pdf(z);
    }
    case Acquisition::PI: {
      const double imp = p.mean - best - weight;
      if (p.stddev <= 0.0) return imp > 0.0 ? 1.0 : 0.0;
      return normal_cdf(imp / p.stddev);
    }
  }
  return 0.0;
}

}  // namespace sizerforge
