#pragma once

// Metric linear algebra kernel: the physical space V and the material space U,
// metrics on both, variance-tagged linear maps between them and their duals,
// the four transposition concepts, trace pairing, isometry and orientation
// predicates, and the matrix exponential/logarithm.

#include <abd/core.hpp>

namespace abd {

// Index spaces a map can go between. Vd/Ud are the duals.
enum class Space : unsigned char { V, U, Vd, Ud };

constexpr Space dual_of(Space s) {
  switch (s) {
    case Space::V: return Space::Vd;
    case Space::U: return Space::Ud;
    case Space::Vd: return Space::V;
    case Space::Ud: return Space::U;
  }
  return Space::V;
}

constexpr bool is_base_space(Space s) { return s == Space::V || s == Space::U; }

const char* space_name(Space s);

// Variance of a map: which space its matrix rows (codomain) and columns
// (domain) refer to. Composition is legal only when domains meet codomains.
struct Variance {
  Space codomain;
  Space domain;
  friend constexpr bool operator==(const Variance&, const Variance&) = default;
};

namespace tag {
inline constexpr Variance mixed_VU{Space::V, Space::U};    // psi^i_A, maps U -> V
inline constexpr Variance mixed_UV{Space::U, Space::V};
inline constexpr Variance endo_V{Space::V, Space::V};
inline constexpr Variance endo_U{Space::U, Space::U};
inline constexpr Variance covariant_UU{Space::Ud, Space::U};      // G_AB
inline constexpr Variance covariant_VV{Space::Vd, Space::V};
inline constexpr Variance contravariant_UU{Space::U, Space::Ud};  // eta^AB
inline constexpr Variance contravariant_VV{Space::V, Space::Vd};
inline constexpr Variance lowering_UV{Space::Ud, Space::V};       // both indices down, U* x V*
inline constexpr Variance lowering_VU{Space::Vd, Space::U};
inline constexpr Variance dual_mixed_UV{Space::Ud, Space::Vd};    // conjugate of mixed_VU
inline constexpr Variance dual_mixed_VU{Space::Vd, Space::Ud};
}  // namespace tag

std::string variance_name(const Variance& v);

// Scale-aware singularity test: |det| <= 1e-12 * (max row norm)^n.
bool nearly_singular(const Mat& m);
// Inverse guarded by nearly_singular; throws SingularMap.
Mat checked_inverse(const Mat& m);

class LinMap {
 public:
  LinMap(Mat m, Variance var);
  static LinMap identity(int n, Variance var);
  static LinMap zero(int n, Variance var);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  Mat& matrix() { return m_; }
  const Variance& variance() const { return var_; }
  Space codomain() const { return var_.codomain; }
  Space domain() const { return var_.domain; }
  bool is_endo() const { return var_.codomain == var_.domain; }

  double trace() const;  // endomorphisms only
  double det() const { return m_.determinant(); }
  LinMap inverse() const;      // swaps domain and codomain; throws SingularMap
  LinMap power(int a) const;   // endomorphisms; negative powers via inverse

  LinMap operator*(const LinMap& rhs) const;  // composition, tag-checked
  LinMap operator+(const LinMap& rhs) const;
  LinMap operator-(const LinMap& rhs) const;
  friend LinMap operator*(double s, const LinMap& x) { return LinMap(s * x.m_, x.var_); }

 private:
  Mat m_;
  Variance var_;
};

class MetricTensor {
 public:
  // space must be a base space (V or U). components must be symmetric and,
  // unless pseudo_euclidean, positive definite (eigenvalue floor 1e-10);
  // the pseudo flag relaxes definiteness but never degeneracy.
  MetricTensor(Mat components, Space space, bool pseudo_euclidean = false);

  int dim() const { return static_cast<int>(g_.rows()); }
  Space space() const { return space_; }
  bool pseudo() const { return pseudo_; }
  const Mat& components() const { return g_; }
  const Mat& inverse() const { return ginv_; }

  LinMap lowering() const;  // l_g: base -> dual, covariant tag
  LinMap raising() const;   // r_g: dual -> base, contravariant tag

  static MetricTensor euclidean(int n, Space space);

 private:
  Mat g_, ginv_;
  Space space_;
  bool pseudo_;
};

// Index lowering/raising on (co)vectors.
Vec lower(const MetricTensor& metric, const Vec& v);
Vec raise(const MetricTensor& metric, const Vec& f);

// Conjugate (dual) map: plain matrix transpose, no metric involved.
LinMap conjugate(const LinMap& psi);

// Contragredient: (psi^*)^{-1} = (psi^{-1})^*.
LinMap contragredient(const LinMap& psi);

// Metric transpose between metrized base spaces: for X: A -> B,
// X^T = metric(A)^{-1} X^t metric(B), a map B -> A. For psi: U -> V this is
// psi^T{}^A_i = eta^{AB} g_{ki} psi^k_B; endomorphisms use one metric twice.
LinMap metric_transpose(const LinMap& psi, const MetricTensor& eta, const MetricTensor& g);

// g-transpose of psi: U -> V; result has both indices down: (_T psi)_{Ai} = g_{ij} psi^j_A.
LinMap g_transpose(const LinMap& psi, const MetricTensor& g);

// eta-transpose of the inverse of psi: U -> V; components eta_{AB} psi^{-1B}_i.
LinMap eta_transpose_of_inverse(const LinMap& psi, const MetricTensor& eta);

// Tr(phi psi) = Tr(psi phi); requires the two maps to compose to endomorphisms both ways.
double trace_pairing(const LinMap& phi, const LinMap& psi);

// True iff the pull-back of the codomain metric equals the domain metric within tol (max norm).
bool is_isometry(const LinMap& phi, const MetricTensor& eta, const MetricTensor& g, double tol = 1e-10);

enum class Orientation { preserving, reversing };
Orientation orientation_class(const LinMap& phi);

// Matrix exponential (scaling-and-squaring) and principal logarithm.
// mat_log throws LogUndefined if the spectrum touches the closed negative real axis.
Mat mat_exp(const Mat& x);
Mat mat_log(const Mat& y);
LinMap mat_exp(const LinMap& x);
LinMap mat_log(const LinMap& y);

// Principal log of the endomorphism metric^{-1} K for symmetric K, computed by
// the generalized symmetric eigendecomposition in the metric inner product.
// Requires a strictly positive spectrum; throws LogUndefined otherwise.
Mat log_selfadjoint_pos(const Mat& k, const MetricTensor& metric);

// Metric transpose of an endomorphism given as a raw matrix (helper shared by
// kinematics and dynamics): metric_inv * X^t * metric.
Mat endo_metric_transpose(const Mat& x, const Mat& metric, const Mat& metric_inv);

}  // namespace abd
