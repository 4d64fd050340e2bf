#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "miqe/density.hpp"
#include "miqe/fock.hpp"
#include "miqe/witness.hpp"

namespace miqe {

/// MIQE_THREADS caps worker threads; defaults to hardware concurrency.
inline int thread_cap() {
  if (const char* env = std::getenv("MIQE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

/// Runs body(i) for i in [0, n). Results must be written by index; the
/// outcome is then independent of the thread count.
template <typename F>
inline void parallel_for(int n, F&& body) {
  const int workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) body(i);
    });
  for (auto& t : pool) t.join();
}

struct OptimizerConfig {
  int grid_resolution = 0;     // points per angle parameter; 0 picks 64 (M=2) or 16
  int refine_iterations = 200; // pattern-search sweeps per start
  double tolerance = 1e-9;     // convergence / separability-detection slack
  int restarts = 8;            // random restarts (and top grid cells kept)
  std::uint64_t seed = 20457;

  void validate() const {
    if (grid_resolution != 0 && grid_resolution < 8)
      throw std::invalid_argument("grid resolution must be at least 8");
    if (tolerance <= 0.0) throw std::invalid_argument("tolerance must be positive");
    if (restarts < 1) throw std::invalid_argument("need at least one restart");
    if (refine_iterations < 1) throw std::invalid_argument("need at least one refinement sweep");
  }

  int resolution_for(int pair_count) const {
    if (grid_resolution != 0) return grid_resolution;
    return pair_count <= 1 ? 64 : 16;
  }
};

/// U(M) parametrized as a product of two-mode rotations, one (theta, phi)
/// pair per mode pair, optionally preceded by per-mode phases. The phases
/// never change separable bounds (they are local), but complete the cover
/// of U(M).
struct GivensAngles {
  int modes = 2;
  std::vector<double> thetas;       // one per pair (p < q), lexicographic pair order
  std::vector<double> phis;         // one per pair
  std::vector<double> mode_phases;  // optional, size modes (empty = zeros)
};

inline std::vector<std::pair<int, int>> mode_pairs(int modes) {
  std::vector<std::pair<int, int>> pairs;
  for (int p = 0; p < modes; ++p)
    for (int q = p + 1; q < modes; ++q) pairs.emplace_back(p, q);
  return pairs;
}

inline ModeUnitary unitary_from_angles(const GivensAngles& a) {
  const auto pairs = mode_pairs(a.modes);
  if (a.thetas.size() != pairs.size() || a.phis.size() != pairs.size())
    throw std::invalid_argument("angle counts do not match M(M-1)/2 pairs");
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(a.modes, a.modes);
  if (!a.mode_phases.empty()) {
    if (a.mode_phases.size() != static_cast<std::size_t>(a.modes))
      throw std::invalid_argument("need one phase per mode");
    for (int l = 0; l < a.modes; ++l) u(l, l) = std::polar(1.0, a.mode_phases[l]);
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [p, q] = pairs[i];
    const double c = std::cos(a.thetas[i]);
    const double s = std::sin(a.thetas[i]);
    const cx e = std::polar(1.0, a.phis[i]);
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(a.modes, a.modes);
    g(p, p) = c;
    g(p, q) = e * s;
    g(q, p) = -std::conj(e) * s;
    g(q, q) = c;
    u = u * g;
  }
  return ModeUnitary(std::move(u));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

}  // namespace detail

/// Haar-random unitary: complex Gaussian matrix, QR, diagonal phase fix.
inline ModeUnitary haar_random_unitary(int modes, std::uint64_t seed) {
  std::mt19937_64 gen(detail::splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd z(modes, modes);
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j) z(i, j) = cx(normal(gen), normal(gen));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < modes; ++j) {
    const cx d = r(j, j);
    q.col(j) *= (std::abs(d) > 0.0) ? d / std::abs(d) : cx(1.0);
  }
  return ModeUnitary(std::move(q));
}

namespace detail {

struct EvalResult {
  double g = -1.0;
  int partition_index = 0;
};

/// g maximized over the listed bipartitions for the state rotated by the
/// unitary built from params (theta, phi interleaved per pair).
class RotatedBoundObjective {
 public:
  RotatedBoundObjective(const FockStateN& state, const std::vector<Bipartition>& partitions)
      : state_(state), partitions_(partitions), pair_count_(static_cast<int>(mode_pairs(state.mode_count()).size())) {}

  int dimension() const { return 2 * pair_count_; }
  int pair_count() const { return pair_count_; }

  ModeUnitary unitary(const std::vector<double>& params) const {
    GivensAngles a;
    a.modes = state_.mode_count();
    for (int i = 0; i < pair_count_; ++i) {
      a.thetas.push_back(params[2 * i]);
      a.phis.push_back(params[2 * i + 1]);
    }
    return unitary_from_angles(a);
  }

  EvalResult operator()(const std::vector<double>& params) const {
    const FockStateN rotated = transform_state(state_, unitary(params));
    EvalResult best;
    for (std::size_t i = 0; i < partitions_.size(); ++i) {
      const double g = schmidt_spectrum(rotated, partitions_[i]).max();
      if (g > best.g) {
        best.g = g;
        best.partition_index = static_cast<int>(i);
      }
    }
    return best;
  }

 private:
  const FockStateN& state_;
  const std::vector<Bipartition>& partitions_;
  int pair_count_;
};

/// Coordinate pattern search: probe +-step per coordinate, halve the step
/// when a sweep brings no improvement, stop below step 1e-7 or at the sweep
/// budget. Returns whether the step floor was reached.
template <typename Objective>
inline bool pattern_search(const Objective& objective, std::vector<double>& params,
                           EvalResult& value, double step, int max_sweeps) {
  constexpr double step_floor = 1e-7;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (step < step_floor) return true;
    bool improved = false;
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (const double delta : {step, -step}) {
        std::vector<double> probe = params;
        probe[i] += delta;
        const EvalResult v = objective(probe);
        if (v.g > value.g) {
          value = v;
          params = std::move(probe);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return step < step_floor;
}

}  // namespace detail

/// Lower bound on sup_U g for the state, over the given bipartitions (pass
/// all_bipartitions(M) for a mode-independent bound). Coarse grid over the
/// rotation parameters, pattern-search refinement from the best cells plus
/// seeded random restarts. Deterministic for a fixed seed regardless of the
/// thread count.
inline WitnessReport mi_bound_numeric(const FockStateN& state,
                                      const std::vector<Bipartition>& partitions,
                                      const OptimizerConfig& cfg = {}) {
  cfg.validate();
  if (partitions.empty()) throw std::invalid_argument("need at least one bipartition");
  for (const auto& p : partitions) p.validate(state.mode_count());
  const detail::RotatedBoundObjective objective(state, partitions);
  const int pairs = objective.pair_count();
  const int dim = objective.dimension();
  const int res = cfg.resolution_for(pairs);
  const double pi = std::acos(-1.0);

  // Grid stage: full (theta, phi) grid for a single pair; for more pairs a
  // theta-only grid (phases zero) plus an equal number of seeded random
  // draws over all parameters, capped at 65536 cells per stage.
  std::vector<std::vector<double>> cells;
  std::mt19937_64 gen(detail::splitmix64(cfg.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (pairs == 1) {
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j)
        cells.push_back({pi * i / res, 2.0 * pi * j / res});
  } else {
    double total = 1.0;
    for (int i = 0; i < pairs; ++i) total *= res;
    const long cap = 65536;
    if (total <= static_cast<double>(cap)) {
      std::vector<int> idx(static_cast<std::size_t>(pairs), 0);
      for (;;) {
        std::vector<double> cell(static_cast<std::size_t>(dim), 0.0);
        for (int i = 0; i < pairs; ++i) cell[2 * i] = pi * idx[static_cast<std::size_t>(i)] / res;
        cells.push_back(std::move(cell));
        int carry = pairs - 1;
        while (carry >= 0 && ++idx[static_cast<std::size_t>(carry)] == res) idx[static_cast<std::size_t>(carry--)] = 0;
        if (carry < 0) break;
      }
    } else {
      for (long i = 0; i < cap; ++i) {
        std::vector<double> cell(static_cast<std::size_t>(dim), 0.0);
        for (int j = 0; j < pairs; ++j) cell[2 * j] = pi * unit(gen);
        cells.push_back(std::move(cell));
      }
    }
    const std::size_t draws = cells.size();
    for (std::size_t i = 0; i < draws; ++i) {
      std::vector<double> cell(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j)
        cell[static_cast<std::size_t>(j)] = (j % 2 == 0 ? pi : 2.0 * pi) * unit(gen);
      cells.push_back(std::move(cell));
    }
  }

  std::vector<detail::EvalResult> grid(cells.size());
  parallel_for(static_cast<int>(cells.size()),
               [&](int i) { grid[static_cast<std::size_t>(i)] = objective(cells[static_cast<std::size_t>(i)]); });

  std::vector<int> order(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return grid[static_cast<std::size_t>(a)].g > grid[static_cast<std::size_t>(b)].g;
  });

  std::vector<std::vector<double>> starts;
  for (int i = 0; i < cfg.restarts && i < static_cast<int>(order.size()); ++i)
    starts.push_back(cells[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  for (int i = 0; i < cfg.restarts; ++i) {
    std::vector<double> cell(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j)
      cell[static_cast<std::size_t>(j)] = (j % 2 == 0 ? pi : 2.0 * pi) * unit(gen);
    starts.push_back(std::move(cell));
  }

  std::vector<double> best_params = starts.front();
  detail::EvalResult best = objective(best_params);
  bool all_converged = true;
  for (auto& start : starts) {
    std::vector<double> params = start;
    detail::EvalResult value = objective(params);
    all_converged &= detail::pattern_search(objective, params, value, pi / res, cfg.refine_iterations);
    if (value.g > best.g) {
      best = value;
      best_params = std::move(params);
    }
  }

  WitnessReport rep;
  rep.g = best.g;
  rep.method = "grid+refine";
  rep.partition = Multipartition::from_bipartition(partitions[static_cast<std::size_t>(best.partition_index)]);
  rep.achieving_unitary = objective.unitary(best_params);
  rep.lower_bound = true;
  rep.converged = all_converged;
  return rep;
}

/// Best squared overlap of the state with product states over the given
/// partition, by alternating optimization: with all parts but one fixed the
/// overlap is linear in the free part, whose optimum is the normalized
/// partial contraction. Monotone per update; random restarts guard against
/// poor basins. For bipartitions this converges to the largest squared
/// Schmidt coefficient.
inline WitnessReport best_product_overlap(const FockStateN& state, const Multipartition& mp,
                                          const OptimizerConfig& cfg = {}) {
  cfg.validate();
  mp.validate(state.mode_count());
  const int parts = static_cast<int>(mp.parts.size());

  // Per-part pattern bases drawn from the state's support; components
  // outside them cannot contribute to the overlap.
  std::vector<std::map<Occupation, int>> pattern_index(static_cast<std::size_t>(parts));
  for (const auto& [occ, amp] : state.amplitudes())
    for (int k = 0; k < parts; ++k)
      pattern_index[static_cast<std::size_t>(k)].try_emplace(
          detail::project(occ, mp.parts[static_cast<std::size_t>(k)]), 0);
  for (auto& index : pattern_index) {
    int idx = 0;
    for (auto& [pattern, slot] : index) slot = idx++;
  }

  struct Key {
    cx amplitude;
    std::vector<int> pattern;  // index into each part's basis
  };
  std::vector<Key> keys;
  for (const auto& [occ, amp] : state.amplitudes()) {
    Key key;
    key.amplitude = amp;
    for (int k = 0; k < parts; ++k)
      key.pattern.push_back(pattern_index[static_cast<std::size_t>(k)].at(
          detail::project(occ, mp.parts[static_cast<std::size_t>(k)])));
    keys.push_back(std::move(key));
  }

  std::mt19937_64 gen(detail::splitmix64(cfg.seed ^ 0xA17E12D3ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  // The iteration converges linearly with the squared ratio of the top two
  // overlap values, so nearly-degenerate instances need a generous budget.
  const int sweeps = std::max(cfg.refine_iterations, 5000);

  double best = 0.0;
  bool converged = false;
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    std::vector<Eigen::VectorXcd> psi(static_cast<std::size_t>(parts));
    for (int k = 0; k < parts; ++k) {
      Eigen::VectorXcd v(static_cast<Eigen::Index>(pattern_index[static_cast<std::size_t>(k)].size()));
      if (restart == 0) {
        // Warm start: accumulate the state's weight per pattern.
        v.setZero();
        for (const auto& key : keys)
          v(key.pattern[static_cast<std::size_t>(k)]) += std::abs(key.amplitude);
      } else {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cx(normal(gen), normal(gen));
      }
      psi[static_cast<std::size_t>(k)] = v / v.norm();
    }

    double overlap2 = 0.0;
    bool settled = false;
    for (int sweep = 0; sweep < sweeps && !settled; ++sweep) {
      const double before = overlap2;
      for (int k = 0; k < parts; ++k) {
        Eigen::VectorXcd contraction =
            Eigen::VectorXcd::Zero(psi[static_cast<std::size_t>(k)].size());
        for (const auto& key : keys) {
          cx weight = key.amplitude;
          for (int j = 0; j < parts; ++j)
            if (j != k)
              weight *= std::conj(psi[static_cast<std::size_t>(j)](key.pattern[static_cast<std::size_t>(j)]));
          contraction(key.pattern[static_cast<std::size_t>(k)]) += weight;
        }
        const double norm = contraction.norm();
        if (norm <= 0.0) {
          for (Eigen::Index i = 0; i < contraction.size(); ++i)
            contraction(i) = cx(normal(gen), normal(gen));
          psi[static_cast<std::size_t>(k)] = contraction / contraction.norm();
          continue;
        }
        psi[static_cast<std::size_t>(k)] = contraction / norm;
        overlap2 = std::max(overlap2, norm * norm);
      }
      settled = sweep > 0 && overlap2 - before < 1e-15;
    }
    best = std::max(best, overlap2);
    converged |= settled;
  }

  WitnessReport rep;
  rep.g = best;
  rep.method = "alternating";
  rep.partition = mp;
  rep.achieving_unitary = ModeUnitary::identity(state.mode_count());
  rep.lower_bound = true;
  rep.converged = converged;
  return rep;
}

struct MiqeCertification {
  bool certified = false;
  double fidelity = 0.0;
  double threshold = 0.0;
};

/// Certified iff <psi| rho |psi> strictly exceeds the separable bound g_mi.
/// No tolerance slack: margins are the caller's business.
inline MiqeCertification certify_miqe(const DensityMatrixN& rho, const FockStateN& psi,
                                      double g_mi) {
  if (!(g_mi > 0.0 && g_mi < 1.0)) throw std::invalid_argument("bound must lie in (0, 1)");
  MiqeCertification out;
  out.fidelity = fidelity(rho, psi);
  out.threshold = g_mi;
  out.certified = out.fidelity > g_mi;
  return out;
}

struct SeparatingBasisResult {
  bool found = false;
  double g = 0.0;
  ModeUnitary unitary = ModeUnitary::identity(1);
  Bipartition partition;
};

/// One-sided search for a mode basis in which the state factorizes across
/// some bipartition. Finding one proves mode-dependent separability; not
/// finding one proves nothing.
inline SeparatingBasisResult find_separating_basis(const FockStateN& state,
                                                   const OptimizerConfig& cfg = {}) {
  const auto partitions = all_bipartitions(state.mode_count());
  const WitnessReport rep = mi_bound_numeric(state, partitions, cfg);
  SeparatingBasisResult out;
  out.g = rep.g;
  out.unitary = rep.achieving_unitary;
  out.partition = Bipartition{rep.partition.parts[0], rep.partition.parts[1]};
  out.found = rep.g >= 1.0 - cfg.tolerance;
  return out;
}

/// Rank-one density matrices reduce to the pure-state search; anything of
/// higher rank is out of reach for this heuristic.
inline SeparatingBasisResult find_separating_basis(const DensityMatrixN& rho,
                                                   const OptimizerConfig& cfg = {}) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho.matrix());
  const Eigen::Index top = es.eigenvalues().size() - 1;
  if (es.eigenvalues()(top) < 1.0 - 1e-10)
    throw std::invalid_argument("separability search needs a rank-one density matrix");
  AmplitudeMap amps;
  for (std::size_t i = 0; i < rho.basis().size(); ++i) {
    const cx a = es.eigenvectors()(static_cast<Eigen::Index>(i), top);
    if (std::abs(a) >= prune_tol) amps[rho.basis()[i]] = a;
  }
  return find_separating_basis(FockStateN(rho.mode_count(), rho.photon_number(), std::move(amps)),
                               cfg);
}

/// Max of g over `samples` Haar-random mode bases, for scan-style evidence.
/// Sample i is drawn from its own stream, so the result is independent of
/// threading.
inline double max_g_over_random_unitaries(const FockStateN& state,
                                          const std::vector<Bipartition>& partitions,
                                          int samples, std::uint64_t seed) {
  if (partitions.empty()) throw std::invalid_argument("need at least one bipartition");
  for (const auto& p : partitions) p.validate(state.mode_count());
  std::vector<double> gs(static_cast<std::size_t>(samples), 0.0);
  parallel_for(samples, [&](int i) {
    const ModeUnitary u =
        haar_random_unitary(state.mode_count(), detail::stream_seed(seed, static_cast<std::uint64_t>(i)));
    const FockStateN rotated = transform_state(state, u);
    double g = 0.0;
    for (const auto& p : partitions) g = std::max(g, schmidt_spectrum(rotated, p).max());
    gs[static_cast<std::size_t>(i)] = g;
  });
  double best = 0.0;
  for (double g : gs) best = std::max(best, g);
  return best;
}

}  // namespace miqe
