#include <abd/spaces.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace abd {

const char* space_name(Space s) {
  switch (s) {
    case Space::V: return "V";
    case Space::U: return "U";
    case Space::Vd: return "V*";
    case Space::Ud: return "U*";
  }
  return "?";
}

std::string variance_name(const Variance& v) {
  return std::string(space_name(v.codomain)) + "<-" + space_name(v.domain);
}

bool nearly_singular(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  const double scale = m.rowwise().norm().maxCoeff();
  return std::abs(m.determinant()) <= 1e-12 * std::pow(scale, n);
}

Mat checked_inverse(const Mat& m) {
  if (nearly_singular(m)) throw SingularMap("matrix is singular within tolerance");
  return m.inverse();
}

LinMap::LinMap(Mat m, Variance var) : m_(std::move(m)), var_(var) {
  if (m_.rows() != m_.cols()) throw DimensionMismatch("LinMap requires a square matrix");
  require_dim(static_cast<int>(m_.rows()));
}

LinMap LinMap::identity(int n, Variance var) { return LinMap(Mat::Identity(n, n), var); }
LinMap LinMap::zero(int n, Variance var) { return LinMap(Mat::Zero(n, n), var); }

double LinMap::trace() const {
  if (!is_endo()) throw TagMismatch("trace of a non-endomorphism (" + variance_name(var_) + ")");
  return m_.trace();
}

LinMap LinMap::inverse() const {
  return LinMap(checked_inverse(m_), Variance{var_.domain, var_.codomain});
}

LinMap LinMap::power(int a) const {
  if (!is_endo()) throw TagMismatch("power of a non-endomorphism (" + variance_name(var_) + ")");
  const int n = dim();
  Mat base = a >= 0 ? m_ : checked_inverse(m_);
  int k = a >= 0 ? a : -a;
  Mat acc = Mat::Identity(n, n);
  for (int i = 0; i < k; ++i) acc = acc * base;
  return LinMap(acc, var_);
}

LinMap LinMap::operator*(const LinMap& rhs) const {
  if (var_.domain != rhs.var_.codomain)
    throw TagMismatch("cannot compose " + variance_name(var_) + " with " + variance_name(rhs.var_));
  require_same_dim(dim(), rhs.dim(), "compose");
  return LinMap(m_ * rhs.m_, Variance{var_.codomain, rhs.var_.domain});
}

LinMap LinMap::operator+(const LinMap& rhs) const {
  if (!(var_ == rhs.var_))
    throw TagMismatch("cannot add " + variance_name(var_) + " and " + variance_name(rhs.var_));
  require_same_dim(dim(), rhs.dim(), "add");
  return LinMap(m_ + rhs.m_, var_);
}

LinMap LinMap::operator-(const LinMap& rhs) const {
  if (!(var_ == rhs.var_))
    throw TagMismatch("cannot subtract " + variance_name(rhs.var_) + " from " + variance_name(var_));
  require_same_dim(dim(), rhs.dim(), "subtract");
  return LinMap(m_ - rhs.m_, var_);
}

MetricTensor::MetricTensor(Mat components, Space space, bool pseudo_euclidean)
    : g_(std::move(components)), space_(space), pseudo_(pseudo_euclidean) {
  if (!is_base_space(space_)) throw TagMismatch("metric must live on a base space (V or U)");
  if (g_.rows() != g_.cols()) throw DimensionMismatch("metric matrix must be square");
  require_dim(static_cast<int>(g_.rows()));
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ValidationError("metric components are not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(g_, Eigen::EigenvaluesOnly);
  const Vec ev = es.eigenvalues();
  if (pseudo_) {
    if (ev.cwiseAbs().minCoeff() <= 1e-10)
      throw ValidationError("pseudo-Euclidean metric is degenerate (|eigenvalue| <= 1e-10)");
  } else {
    if (ev.minCoeff() <= 1e-10)
      throw ValidationError("metric is not positive definite (eigenvalue <= 1e-10)");
  }
  ginv_ = g_.inverse();
}

LinMap MetricTensor::lowering() const {
  return LinMap(g_, Variance{dual_of(space_), space_});
}

LinMap MetricTensor::raising() const {
  return LinMap(ginv_, Variance{space_, dual_of(space_)});
}

MetricTensor MetricTensor::euclidean(int n, Space space) {
  return MetricTensor(Mat::Identity(n, n), space);
}

Vec lower(const MetricTensor& metric, const Vec& v) {
  require_same_dim(metric.dim(), static_cast<int>(v.size()), "lower");
  return metric.components() * v;
}

Vec raise(const MetricTensor& metric, const Vec& f) {
  require_same_dim(metric.dim(), static_cast<int>(f.size()), "raise");
  return metric.inverse() * f;
}

LinMap conjugate(const LinMap& psi) {
  return LinMap(psi.matrix().transpose(),
                Variance{dual_of(psi.domain()), dual_of(psi.codomain())});
}

LinMap contragredient(const LinMap& psi) {
  return LinMap(checked_inverse(psi.matrix()).transpose(),
                Variance{dual_of(psi.codomain()), dual_of(psi.domain())});
}

namespace {
const MetricTensor& metric_for(Space s, const MetricTensor& eta, const MetricTensor& g) {
  if (!is_base_space(s)) throw TagMismatch("metric transpose needs base-space indices");
  return s == Space::V ? g : eta;
}
}  // namespace

LinMap metric_transpose(const LinMap& psi, const MetricTensor& eta, const MetricTensor& g) {
  const MetricTensor& md = metric_for(psi.domain(), eta, g);
  const MetricTensor& mc = metric_for(psi.codomain(), eta, g);
  require_same_dim(psi.dim(), md.dim(), "metric_transpose");
  require_same_dim(psi.dim(), mc.dim(), "metric_transpose");
  return LinMap(md.inverse() * psi.matrix().transpose() * mc.components(),
                Variance{psi.domain(), psi.codomain()});
}

LinMap g_transpose(const LinMap& psi, const MetricTensor& g) {
  if (!(psi.variance() == tag::mixed_VU)) throw TagMismatch("g_transpose expects a map U -> V");
  require_same_dim(psi.dim(), g.dim(), "g_transpose");
  if (g.space() != Space::V) throw TagMismatch("g_transpose needs the metric on V");
  return LinMap(psi.matrix().transpose() * g.components(), tag::lowering_UV);
}

LinMap eta_transpose_of_inverse(const LinMap& psi, const MetricTensor& eta) {
  if (!(psi.variance() == tag::mixed_VU)) throw TagMismatch("eta_transpose_of_inverse expects a map U -> V");
  require_same_dim(psi.dim(), eta.dim(), "eta_transpose_of_inverse");
  if (eta.space() != Space::U) throw TagMismatch("eta_transpose_of_inverse needs the metric on U");
  return LinMap(checked_inverse(psi.matrix()).transpose() * eta.components(), tag::lowering_VU);
}

double trace_pairing(const LinMap& phi, const LinMap& psi) {
  if (phi.domain() != psi.codomain() || psi.domain() != phi.codomain())
    throw TagMismatch("trace pairing of " + variance_name(phi.variance()) + " with " +
                      variance_name(psi.variance()));
  require_same_dim(phi.dim(), psi.dim(), "trace_pairing");
  return (phi.matrix() * psi.matrix()).trace();
}

bool is_isometry(const LinMap& phi, const MetricTensor& eta, const MetricTensor& g, double tol) {
  const MetricTensor& md = metric_for(phi.domain(), eta, g);
  const MetricTensor& mc = metric_for(phi.codomain(), eta, g);
  const Mat pullback = phi.matrix().transpose() * mc.components() * phi.matrix();
  return (md.components() - pullback).cwiseAbs().maxCoeff() <= tol;
}

Orientation orientation_class(const LinMap& phi) {
  if (nearly_singular(phi.matrix())) throw SingularMap("orientation of a singular map");
  return phi.det() > 0 ? Orientation::preserving : Orientation::reversing;
}

Mat mat_exp(const Mat& x) { return x.exp(); }

Mat mat_log(const Mat& y) {
  if (y.rows() != y.cols()) throw DimensionMismatch("mat_log requires a square matrix");
  const double scale = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::EigenSolver<Mat> es(y, false);
  const auto ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i).imag()) <= 1e-12 * scale && ev(i).real() <= 1e-12 * scale)
      throw LogUndefined("matrix logarithm undefined: spectrum touches (-inf, 0]");
  }
  return y.log();
}

LinMap mat_exp(const LinMap& x) {
  if (!x.is_endo()) throw TagMismatch("mat_exp of a non-endomorphism");
  return LinMap(mat_exp(x.matrix()), x.variance());
}

LinMap mat_log(const LinMap& y) {
  if (!y.is_endo()) throw TagMismatch("mat_log of a non-endomorphism");
  return LinMap(mat_log(y.matrix()), y.variance());
}

Mat log_selfadjoint_pos(const Mat& k, const MetricTensor& metric) {
  require_same_dim(static_cast<int>(k.rows()), metric.dim(), "log_selfadjoint_pos");
  if (metric.pseudo()) return mat_log(Mat(metric.inverse() * k));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(k, metric.components());
  const Vec ev = ges.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev.minCoeff() <= 1e-12 * scale)
    throw LogUndefined("matrix logarithm undefined: non-positive spectrum");
  // Eigenvectors are orthonormal in the metric inner product, so the inverse
  // of the eigenvector matrix is its metric transpose.
  const Mat& vecs = ges.eigenvectors();
  return vecs * ev.array().log().matrix().asDiagonal() * vecs.transpose() * metric.components();
}

Mat endo_metric_transpose(const Mat& x, const Mat& metric, const Mat& metric_inv) {
  return metric_inv * x.transpose() * metric;
}

}  // namespace abd
