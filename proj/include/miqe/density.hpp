#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "miqe/fock.hpp"

namespace miqe {

/// Density operator on the fixed-photon-number subspace, stored in the
/// canonical (lexicographic) occupation basis. Construction enforces
/// hermiticity and unit trace to 1e-12 and positive semidefiniteness down
/// to -1e-10 on the smallest eigenvalue.
class DensityMatrixN {
 public:
  DensityMatrixN(int modes, int photons, Eigen::MatrixXcd matrix)
      : modes_(modes),
        photons_(photons),
        basis_(enumerate_occupations(modes, photons)),
        matrix_(std::move(matrix)) {
    if (modes_ < 1 || photons_ < 1)
      throw std::invalid_argument("density matrix needs at least one mode and one photon");
    const auto d = static_cast<Eigen::Index>(basis_.size());
    if (matrix_.rows() != d || matrix_.cols() != d)
      throw std::invalid_argument("density matrix dimension does not match subspace");
    if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > construction_tol)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(matrix_.trace() - cx(1.0)) > construction_tol)
      throw std::invalid_argument("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::invalid_argument("density matrix has a negative eigenvalue");
  }

  static DensityMatrixN from_pure(const FockStateN& psi) {
    const auto basis = enumerate_occupations(psi.mode_count(), psi.photon_number());
    Eigen::VectorXcd v = state_vector(psi, basis);
    return DensityMatrixN(psi.mode_count(), psi.photon_number(), v * v.adjoint());
  }

  static DensityMatrixN maximally_mixed(int modes, int photons) {
    const auto d = subspace_dimension(modes, photons);
    return DensityMatrixN(modes, photons,
                          Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
  }

  /// weight * a + (1 - weight) * b.
  static DensityMatrixN convex_mix(double weight, const DensityMatrixN& a,
                                   const DensityMatrixN& b) {
    if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("mixing weight outside [0,1]");
    if (a.modes_ != b.modes_ || a.photons_ != b.photons_)
      throw std::invalid_argument("density matrices live in different subspaces");
    return DensityMatrixN(a.modes_, a.photons_,
                          weight * a.matrix_ + (1.0 - weight) * b.matrix_);
  }

  /// Coordinates of a pure state in a canonical basis list.
  static Eigen::VectorXcd state_vector(const FockStateN& psi, const std::vector<Occupation>& basis) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) v(static_cast<Eigen::Index>(i)) = psi.amplitude(basis[i]);
    return v;
  }

  int mode_count() const { return modes_; }
  int photon_number() const { return photons_; }
  const std::vector<Occupation>& basis() const { return basis_; }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }

 private:
  int modes_;
  int photons_;
  std::vector<Occupation> basis_;
  Eigen::MatrixXcd matrix_;
};

/// <psi| rho |psi>, in [0, 1] up to numerical noise.
inline double fidelity(const DensityMatrixN& rho, const FockStateN& psi) {
  if (rho.mode_count() != psi.mode_count() || rho.photon_number() != psi.photon_number())
    throw std::invalid_argument("state and density matrix live in different subspaces");
  const Eigen::VectorXcd v = DensityMatrixN::state_vector(psi, rho.basis());
  return (v.adjoint() * rho.matrix() * v)(0, 0).real();
}

}  // namespace miqe
