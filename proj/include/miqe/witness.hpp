#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "miqe/fock.hpp"

namespace miqe {

/// Two disjoint, nonempty, sorted sets of mode indices covering 0..M-1.
struct Bipartition {
  std::vector<int> part_a;
  std::vector<int> part_b;

  static Bipartition of(std::vector<int> a, int modes) {
    std::sort(a.begin(), a.end());
    std::vector<int> b;
    for (int i = 0; i < modes; ++i)
      if (!std::binary_search(a.begin(), a.end(), i)) b.push_back(i);
    Bipartition p{std::move(a), std::move(b)};
    p.validate(modes);
    return p;
  }

  void validate(int modes) const {
    if (part_a.empty() || part_b.empty())
      throw std::invalid_argument("bipartition parts must be nonempty");
    std::set<int> seen;
    for (const auto* part : {&part_a, &part_b}) {
      if (!std::is_sorted(part->begin(), part->end()))
        throw std::invalid_argument("bipartition parts must be sorted");
      for (int i : *part) {
        if (i < 0 || i >= modes) throw std::invalid_argument("mode index outside 0..M-1");
        if (!seen.insert(i).second) throw std::invalid_argument("mode appears twice in bipartition");
      }
    }
    if (static_cast<int>(seen.size()) != modes)
      throw std::invalid_argument("bipartition does not cover all modes");
  }
};

/// Ordered list of disjoint nonempty mode sets covering 0..M-1.
struct Multipartition {
  std::vector<std::vector<int>> parts;

  static Multipartition from_bipartition(const Bipartition& p) {
    return Multipartition{{p.part_a, p.part_b}};
  }

  static Multipartition full_split(int modes) {
    Multipartition mp;
    for (int i = 0; i < modes; ++i) mp.parts.push_back({i});
    return mp;
  }

  void validate(int modes) const {
    if (parts.size() < 2) throw std::invalid_argument("partition needs at least two parts");
    std::set<int> seen;
    for (const auto& part : parts) {
      if (part.empty()) throw std::invalid_argument("partition parts must be nonempty");
      for (int i : part) {
        if (i < 0 || i >= modes) throw std::invalid_argument("mode index outside 0..M-1");
        if (!seen.insert(i).second) throw std::invalid_argument("mode appears twice in partition");
      }
    }
    if (static_cast<int>(seen.size()) != modes)
      throw std::invalid_argument("partition does not cover all modes");
  }
};

/// All 2^(M-1) - 1 bipartitions; part_a always contains mode 0.
inline std::vector<Bipartition> all_bipartitions(int modes) {
  if (modes < 2) throw std::invalid_argument("bipartitions need at least two modes");
  std::vector<Bipartition> out;
  const int others = modes - 1;
  for (int mask = 0; mask < (1 << others) - 1; ++mask) {
    std::vector<int> a{0};
    for (int i = 0; i < others; ++i)
      if (mask & (1 << i)) a.push_back(i + 1);
    out.push_back(Bipartition::of(std::move(a), modes));
  }
  return out;
}

/// Squared Schmidt coefficients in descending order; they sum to one.
struct SchmidtSpectrum {
  std::vector<double> weights;
  double max() const { return weights.empty() ? 0.0 : weights.front(); }
};

namespace detail {
inline Occupation project(const Occupation& occ, const std::vector<int>& part) {
  Occupation out(part.size());
  for (std::size_t i = 0; i < part.size(); ++i) out[i] = occ[part[i]];
  return out;
}
}  // namespace detail

/// Reshape the amplitude map into (occupations of part A) x (occupations of
/// part B) and return the squared singular values. The photon-number basis
/// already block-diagonalizes this matrix, so the singular values are the
/// Schmidt coefficients across the cut.
inline SchmidtSpectrum schmidt_spectrum(const FockStateN& state, const Bipartition& p) {
  p.validate(state.mode_count());
  std::map<Occupation, int> rows, cols;
  for (const auto& [occ, amp] : state.amplitudes()) {
    rows.try_emplace(detail::project(occ, p.part_a), 0);
    cols.try_emplace(detail::project(occ, p.part_b), 0);
  }
  int idx = 0;
  for (auto& [k, v] : rows) v = idx++;
  idx = 0;
  for (auto& [k, v] : cols) v = idx++;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows.size()),
                                              static_cast<Eigen::Index>(cols.size()));
  for (const auto& [occ, amp] : state.amplitudes())
    a(rows.at(detail::project(occ, p.part_a)), cols.at(detail::project(occ, p.part_b))) = amp;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  SchmidtSpectrum s;
  s.weights.reserve(static_cast<std::size_t>(svd.singularValues().size()));
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    s.weights.push_back(svd.singularValues()(i) * svd.singularValues()(i));
  return s;
}

/// Separable bound for a state and partition, plus how it was obtained.
/// g is the maximal squared overlap with product states across the
/// partition; g = 1 (within tolerance) iff the state is separable there.
struct WitnessReport {
  double g = 0.0;
  std::string method;  // "closed-form" | "svd" | "alternating" | "grid+refine"
  Multipartition partition;
  ModeUnitary achieving_unitary = ModeUnitary::identity(1);
  std::vector<int> argmax;  // spectrum positions attaining g (svd route)
  bool lower_bound = false;
  bool converged = true;
};

/// g for a pure state and fixed bipartition: the largest squared Schmidt
/// coefficient. Ties within 1e-10 are all listed in argmax.
inline WitnessReport separable_bound(const FockStateN& state, const Bipartition& p) {
  const SchmidtSpectrum s = schmidt_spectrum(state, p);
  WitnessReport rep;
  rep.g = s.max();
  rep.method = "svd";
  rep.partition = Multipartition::from_bipartition(p);
  rep.achieving_unitary = ModeUnitary::identity(state.mode_count());
  for (std::size_t i = 0; i < s.weights.size(); ++i)
    if (s.weights[i] >= rep.g - algebra_tol) rep.argmax.push_back(static_cast<int>(i));
  return rep;
}

/// Schmidt coefficients of the two-photon family state in the rotated basis
/// parametrized by (t, r), |t|^2 + |r|^2 = 1. Returned in the order
/// (two photons in mode 1, one in each, two in mode 2).
struct TwoPhotonSchmidt {
  cx c20;
  cx c11;
  cx c02;
};

inline TwoPhotonSchmidt two_photon_schmidt_coeffs(cx lambda, cx t, cx r) {
  if (std::abs(std::norm(t) + std::norm(r) - 1.0) > construction_tol)
    throw std::invalid_argument("two-mode coefficients need |t|^2 + |r|^2 = 1");
  const double denom = std::sqrt(2.0 + std::norm(lambda));
  const double root2 = std::sqrt(2.0);
  TwoPhotonSchmidt c;
  c.c20 = root2 * std::conj(t) * (std::conj(t) - lambda * std::conj(r)) / denom;
  c.c02 = root2 * r * (r + lambda * t) / denom;
  c.c11 = (2.0 * std::conj(t) * r + lambda * (std::norm(t) - std::norm(r))) / denom;
  return c;
}

/// Squared Schmidt coefficients of the two-photon family along the real
/// rotation t = cos(theta), r = sin(theta); real lambda. Trigonometric
/// closed forms, equal to the squared moduli of two_photon_schmidt_coeffs.
struct TwoPhotonWeights {
  double l20;
  double l02;
  double l11;
  double max() const { return std::max({l20, l02, l11}); }
};

inline TwoPhotonWeights two_photon_weights(double lambda, double theta) {
  const double c2 = std::cos(2.0 * theta);
  const double s2 = std::sin(2.0 * theta);
  const double d = 2.0 + lambda * lambda;
  const auto sq = [](double x) { return x * x; };
  TwoPhotonWeights w;
  w.l20 = 0.5 * sq(1.0 + c2 - lambda * s2) / d;
  w.l02 = 0.5 * sq(1.0 - c2 + lambda * s2) / d;
  w.l11 = sq(s2 + lambda * c2) / d;
  return w;
}

/// Mode-independent separable bound for the two-photon family, maximized in
/// closed form over all two-mode unitaries:
/// max{ 1/2 + sqrt(1 + |lambda|^2) / (2 + |lambda|^2), 1 - 1/(2 + |lambda|^2) }.
/// Strictly below 1 for every lambda != 0.
inline double two_photon_mi_bound(double lambda) {
  const double lam = std::abs(lambda);
  if (lam == 0.0)
    throw std::invalid_argument("lambda = 0 is degenerate (parallel photons, bound 1)");
  const double d = 2.0 + lam * lam;
  return std::max(0.5 + std::sqrt(1.0 + lam * lam) / d, 1.0 - 1.0 / d);
}

struct OptimalTwoPhoton {
  double lambda;
  double bound;
};

/// The family member hardest to approximate with separable states in any
/// basis: |lambda| = sqrt(2 (1 + sqrt(2))), bound (2 + sqrt(2)) / 4. At this
/// lambda the two branches of the bound coincide.
inline OptimalTwoPhoton optimal_two_photon() {
  return {std::sqrt(2.0 * (1.0 + std::sqrt(2.0))), (2.0 + std::sqrt(2.0)) / 4.0};
}

/// Numeric minimizer of two_photon_mi_bound: coarse scan then golden-section
/// refinement. The bound is the max of a decreasing and an increasing branch,
/// so it is unimodal on (0, hi].
inline OptimalTwoPhoton minimize_two_photon_mi_bound(double lo = 1e-3, double hi = 10.0) {
  if (!(0.0 < lo && lo < hi)) throw std::invalid_argument("need 0 < lo < hi");
  const int scan = 2000;
  int best = 0;
  double best_g = two_photon_mi_bound(lo);
  auto at = [&](int i) { return lo + (hi - lo) * i / (scan - 1); };
  for (int i = 1; i < scan; ++i) {
    const double g = two_photon_mi_bound(at(i));
    if (g < best_g) {
      best_g = g;
      best = i;
    }
  }
  double a = at(std::max(0, best - 1));
  double b = at(std::min(scan - 1, best + 1));
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = two_photon_mi_bound(x1), f2 = two_photon_mi_bound(x2);
  while (b - a > 1e-12) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = two_photon_mi_bound(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = two_photon_mi_bound(x2);
    }
  }
  const double lam = 0.5 * (a + b);
  return {lam, two_photon_mi_bound(lam)};
}

}  // namespace miqe
