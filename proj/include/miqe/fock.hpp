#pragma once

#include <algorithm>
#include <complex>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace miqe {

using cx = std::complex<double>;

// Tolerance conventions used across the library: construction-time checks are
// strict, algebraic identities get an order of magnitude of slack, and
// amplitudes below the prune threshold are dropped from sparse maps.
inline constexpr double construction_tol = 1e-12;
inline constexpr double algebra_tol = 1e-10;
inline constexpr double prune_tol = 1e-15;
inline constexpr double rank_rel_tol = 1e-10;

/// Photon counts per mode; keys of the sparse amplitude map. std::map keeps
/// them in lexicographic order, which is also the canonical basis order.
using Occupation = std::vector<int>;
using AmplitudeMap = std::map<Occupation, cx>;

inline int total_photons(const Occupation& occ) {
  return std::accumulate(occ.begin(), occ.end(), 0);
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double sqrt_factorial_product(const Occupation& occ) {
  double p = 1.0;
  for (int n : occ) p *= factorial(n);
  return std::sqrt(p);
}

/// dim of the fixed-photon-number subspace: C(photons + modes - 1, photons).
inline long subspace_dimension(int modes, int photons) {
  long d = 1;
  for (int i = 1; i <= photons; ++i) d = d * (modes - 1 + i) / i;
  return d;
}

/// All occupations of `modes` modes with `photons` photons total, in
/// lexicographic (canonical) order.
inline std::vector<Occupation> enumerate_occupations(int modes, int photons) {
  std::vector<Occupation> out;
  Occupation cur(modes, 0);
  auto rec = [&](auto&& self, int mode, int left) -> void {
    if (mode == modes - 1) {
      cur[mode] = left;
      out.push_back(cur);
      return;
    }
    for (int n = 0; n <= left; ++n) {
      cur[mode] = n;
      self(self, mode + 1, left - n);
    }
  };
  if (modes >= 1) rec(rec, 0, photons);
  return out;
}

/// N x M matrix whose k-th row holds the mode coefficients of the k-th
/// created photon. Zero rows are rejected; linear independence is not
/// required here (it is a property the separability classifier examines).
class ExcitationMatrix {
 public:
  explicit ExcitationMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.cols() < 1)
      throw std::invalid_argument("excitation matrix must be at least 1x1");
    for (Eigen::Index k = 0; k < entries_.rows(); ++k)
      if (entries_.row(k).norm() == 0.0)
        throw std::invalid_argument("excitation matrix row " + std::to_string(k + 1) +
                                    " is zero; zero excitations are not representable");
  }

  /// [[1, 0], [1, lambda]]: one photon along mode 1, a second along a
  /// non-parallel, non-orthogonal direction controlled by lambda.
  static ExcitationMatrix two_photon_family(cx lambda) {
    Eigen::MatrixXcd g(2, 2);
    g << cx(1.0), cx(0.0), cx(1.0), lambda;
    return ExcitationMatrix(std::move(g));
  }

  int photon_count() const { return static_cast<int>(entries_.rows()); }
  int mode_count() const { return static_cast<int>(entries_.cols()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }

 private:
  Eigen::MatrixXcd entries_;
};

/// M x M mode-basis change U with U^dag U = id (checked at construction).
/// Convention: U maps old-basis creation operators onto the new basis,
/// a_l^dag = sum_j U(l,j) b_j^dag, so excitation rows transform as gamma * U.
class ModeUnitary {
 public:
  explicit ModeUnitary(Eigen::MatrixXcd u) : u_(std::move(u)) {
    if (u_.rows() != u_.cols() || u_.rows() < 1)
      throw std::invalid_argument("mode unitary must be square");
    const Eigen::MatrixXcd gram = u_.adjoint() * u_;
    const double defect =
        (gram - Eigen::MatrixXcd::Identity(u_.rows(), u_.cols())).cwiseAbs().maxCoeff();
    if (defect > construction_tol)
      throw std::invalid_argument("matrix is not unitary (defect " + std::to_string(defect) + ")");
  }

  static ModeUnitary identity(int m) { return ModeUnitary(Eigen::MatrixXcd::Identity(m, m)); }

  /// [[t, r], [-conj(r), conj(t)]] with |t|^2 + |r|^2 = 1.
  static ModeUnitary two_mode(cx t, cx r) {
    if (std::abs(std::norm(t) + std::norm(r) - 1.0) > construction_tol)
      throw std::invalid_argument("two-mode coefficients need |t|^2 + |r|^2 = 1");
    Eigen::MatrixXcd u(2, 2);
    u << t, r, -std::conj(r), std::conj(t);
    return ModeUnitary(std::move(u));
  }

  static ModeUnitary rotation(double theta) {
    return two_mode(cx(std::cos(theta)), cx(std::sin(theta)));
  }

  /// Identity on all modes except p and q, which mix via two_mode(t, r).
  static ModeUnitary embedded_two_mode(int m, int p, int q, cx t, cx r) {
    if (p < 0 || q < 0 || p >= m || q >= m || p == q)
      throw std::invalid_argument("invalid mode pair for embedded rotation");
    if (std::abs(std::norm(t) + std::norm(r) - 1.0) > construction_tol)
      throw std::invalid_argument("two-mode coefficients need |t|^2 + |r|^2 = 1");
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(m, m);
    u(p, p) = t;
    u(p, q) = r;
    u(q, p) = -std::conj(r);
    u(q, q) = std::conj(t);
    return ModeUnitary(std::move(u));
  }

  int dim() const { return static_cast<int>(u_.rows()); }
  const Eigen::MatrixXcd& entries() const { return u_; }
  ModeUnitary adjoint() const { return ModeUnitary(u_.adjoint()); }

 private:
  Eigen::MatrixXcd u_;
};

/// Pure state with a fixed total photon number over M modes, stored as a
/// sparse map from occupations to amplitudes. Construction validates the
/// keys, normalizes unless the input is already unit-norm, and prunes
/// negligible amplitudes. The vacuum (N = 0) is not representable.
class FockStateN {
 public:
  FockStateN(int modes, int photons, AmplitudeMap amplitudes)
      : modes_(modes), photons_(photons), amps_(std::move(amplitudes)) {
    if (modes_ < 1) throw std::invalid_argument("state needs at least one mode");
    if (photons_ < 1) throw std::invalid_argument("state needs at least one photon");
    double norm2 = 0.0;
    for (const auto& [occ, amp] : amps_) {
      if (static_cast<int>(occ.size()) != modes_)
        throw std::invalid_argument("occupation length does not match mode count");
      for (int n : occ)
        if (n < 0) throw std::invalid_argument("negative occupation");
      if (total_photons(occ) != photons_)
        throw std::invalid_argument("occupation photon total does not match state");
      norm2 += std::norm(amp);
    }
    if (norm2 <= 0.0) throw std::invalid_argument("state has zero norm");
    const double norm = std::sqrt(norm2);
    // Skip the division for already-normalized input so that stored
    // amplitudes round-trip bit-stably through files.
    if (std::abs(norm - 1.0) > construction_tol)
      for (auto& [occ, amp] : amps_) amp /= norm;
    for (auto it = amps_.begin(); it != amps_.end();)
      it = (std::abs(it->second) < prune_tol) ? amps_.erase(it) : std::next(it);
  }

  static FockStateN basis_ket(const Occupation& occ) {
    AmplitudeMap m{{occ, cx(1.0)}};
    return FockStateN(static_cast<int>(occ.size()), total_photons(occ), std::move(m));
  }

  int mode_count() const { return modes_; }
  int photon_number() const { return photons_; }
  const AmplitudeMap& amplitudes() const { return amps_; }

  cx amplitude(const Occupation& occ) const {
    auto it = amps_.find(occ);
    return it == amps_.end() ? cx(0.0) : it->second;
  }

 private:
  int modes_;
  int photons_;
  AmplitudeMap amps_;
};

/// Apply the creation operator sum_l coeffs(l) a_l^dag to a number-state
/// expansion; adding a photon to a mode holding n multiplies by sqrt(n + 1).
inline AmplitudeMap apply_creation(const AmplitudeMap& in, const Eigen::RowVectorXcd& coeffs) {
  AmplitudeMap out;
  for (const auto& [occ, amp] : in) {
    for (int l = 0; l < coeffs.size(); ++l) {
      if (coeffs(l) == cx(0.0)) continue;
      Occupation next = occ;
      next[l] += 1;
      out[next] += amp * coeffs(l) * std::sqrt(static_cast<double>(occ[l] + 1));
    }
  }
  return out;
}

/// Normalized state generated by applying each excitation row to vacuum.
inline FockStateN build_state(const ExcitationMatrix& gamma) {
  AmplitudeMap acc{{Occupation(gamma.mode_count(), 0), cx(1.0)}};
  for (int k = 0; k < gamma.photon_count(); ++k)
    acc = apply_creation(acc, gamma.entries().row(k));
  return FockStateN(gamma.mode_count(), gamma.photon_count(), std::move(acc));
}

/// Re-express each excited mode in the new basis: gamma' = gamma * U.
inline ExcitationMatrix transform_gamma(const ExcitationMatrix& gamma, const ModeUnitary& u) {
  if (gamma.mode_count() != u.dim())
    throw std::invalid_argument("excitation matrix and unitary dimensions differ");
  return ExcitationMatrix(gamma.entries() * u.entries());
}

/// Re-express a state in the new mode basis by substituting
/// a_l^dag = sum_j U(l,j) b_j^dag inside every basis monomial. Agrees with
/// build_state(transform_gamma(gamma, u)) whenever the state came from gamma.
inline FockStateN transform_state(const FockStateN& state, const ModeUnitary& u) {
  const int m = state.mode_count();
  if (m != u.dim()) throw std::invalid_argument("state and unitary dimensions differ");
  AmplitudeMap acc;
  for (const auto& [occ, amp] : state.amplitudes()) {
    AmplitudeMap term{{Occupation(m, 0), amp / sqrt_factorial_product(occ)}};
    for (int l = 0; l < m; ++l)
      for (int rep = 0; rep < occ[l]; ++rep) term = apply_creation(term, u.entries().row(l));
    for (const auto& [occ2, amp2] : term) acc[occ2] += amp2;
  }
  return FockStateN(m, state.photon_number(), std::move(acc));
}

/// Hermitian inner product over the occupation basis, conjugate-linear in
/// the first argument.
inline cx inner_product(const FockStateN& lhs, const FockStateN& rhs) {
  if (lhs.mode_count() != rhs.mode_count() || lhs.photon_number() != rhs.photon_number())
    throw std::invalid_argument("states live in different subspaces");
  cx acc(0.0);
  for (const auto& [occ, amp] : lhs.amplitudes()) acc += std::conj(amp) * rhs.amplitude(occ);
  return acc;
}

/// Unnormalized amplitude <n| c_1^dag ... c_N^dag |vac> computed as
/// perm(gamma_n) / sqrt(prod_l n_l!), where gamma_n repeats column l of
/// gamma n_l times. The permanent is a naive sum over permutations, so this
/// stays an implementation-independent cross-check of build_state (N <= 6
/// territory).
inline cx amplitude_via_permanent(const ExcitationMatrix& gamma, const Occupation& occ) {
  const int n = gamma.photon_count();
  if (static_cast<int>(occ.size()) != gamma.mode_count())
    throw std::invalid_argument("occupation length does not match excitation modes");
  if (total_photons(occ) != n)
    throw std::invalid_argument("occupation photon total does not match excitation count");
  std::vector<int> col_modes;
  for (int l = 0; l < gamma.mode_count(); ++l)
    for (int rep = 0; rep < occ[l]; ++rep) col_modes.push_back(l);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  cx sum(0.0);
  do {
    cx prod(1.0);
    for (int k = 0; k < n; ++k) prod *= gamma.entries()(k, col_modes[perm[k]]);
    sum += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / sqrt_factorial_product(occ);
}

}  // namespace miqe
