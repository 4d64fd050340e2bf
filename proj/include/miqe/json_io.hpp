#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "miqe/density.hpp"
#include "miqe/fock.hpp"
#include "miqe/optimize.hpp"
#include "miqe/qr_separability.hpp"
#include "miqe/witness.hpp"

// JSON schemas (documented in docs/schemas.md). Complex numbers are
// [re, im] pairs, occupations are integer arrays, and mode/row indices are
// 1-based on the wire.
namespace miqe {

using json = nlohmann::ordered_json;

inline json complex_to_json(cx z) { return json::array({z.real(), z.imag()}); }

inline cx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument("complex values must be [re, im] number pairs");
  return cx(j[0].get<double>(), j[1].get<double>());
}

inline json matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXcd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw std::invalid_argument("matrix rows have unequal lengths");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
  }
  return m;
}

inline json indices_to_json(const std::vector<int>& zero_based) {
  json out = json::array();
  for (int i : zero_based) out.push_back(i + 1);
  return out;
}

inline std::vector<int> indices_from_json(const json& j) {
  std::vector<int> out;
  for (const auto& v : j) {
    const int i = v.get<int>();
    if (i < 1) throw std::invalid_argument("indices are 1-based");
    out.push_back(i - 1);
  }
  return out;
}

// --- excitation matrix ---

inline json to_json(const ExcitationMatrix& gamma) {
  return json{{"gamma", matrix_to_json(gamma.entries())}};
}

inline ExcitationMatrix excitation_from_json(const json& j) {
  if (!j.contains("gamma")) throw std::invalid_argument("missing \"gamma\" field");
  return ExcitationMatrix(matrix_from_json(j.at("gamma")));
}

// --- mode unitary ---

inline json to_json(const ModeUnitary& u) { return json{{"unitary", matrix_to_json(u.entries())}}; }

inline ModeUnitary unitary_from_json(const json& j) {
  if (!j.contains("unitary")) throw std::invalid_argument("missing \"unitary\" field");
  return ModeUnitary(matrix_from_json(j.at("unitary")));
}

// --- Fock state ---

inline json to_json(const FockStateN& state) {
  json amps = json::array();
  for (const auto& [occ, amp] : state.amplitudes())
    amps.push_back(json{{"occupation", occ}, {"amplitude", complex_to_json(amp)}});
  return json{{"modes", state.mode_count()},
              {"photons", state.photon_number()},
              {"amplitudes", std::move(amps)}};
}

inline FockStateN state_from_json(const json& j) {
  for (const char* field : {"modes", "photons", "amplitudes"})
    if (!j.contains(field)) throw std::invalid_argument(std::string("missing \"") + field + "\" field");
  const int modes = j.at("modes").get<int>();
  const int photons = j.at("photons").get<int>();
  AmplitudeMap amps;
  for (const auto& entry : j.at("amplitudes")) {
    Occupation occ = entry.at("occupation").get<Occupation>();
    if (!amps.emplace(std::move(occ), complex_from_json(entry.at("amplitude"))).second)
      throw std::invalid_argument("duplicate occupation in state file");
  }
  return FockStateN(modes, photons, std::move(amps));
}

// --- density matrix ---

inline json to_json(const DensityMatrixN& rho) {
  json basis = json::array();
  for (const auto& occ : rho.basis()) basis.push_back(occ);
  return json{{"modes", rho.mode_count()},
              {"photons", rho.photon_number()},
              {"basis", std::move(basis)},
              {"matrix", matrix_to_json(rho.matrix())}};
}

inline DensityMatrixN density_from_json(const json& j) {
  for (const char* field : {"modes", "photons", "matrix"})
    if (!j.contains(field)) throw std::invalid_argument(std::string("missing \"") + field + "\" field");
  const int modes = j.at("modes").get<int>();
  const int photons = j.at("photons").get<int>();
  DensityMatrixN rho(modes, photons, matrix_from_json(j.at("matrix")));
  if (j.contains("basis")) {
    const auto canonical = enumerate_occupations(modes, photons);
    const auto& basis = j.at("basis");
    if (basis.size() != canonical.size())
      throw std::invalid_argument("basis does not match the fixed-photon-number subspace");
    for (std::size_t i = 0; i < canonical.size(); ++i)
      if (basis[i].get<Occupation>() != canonical[i])
        throw std::invalid_argument("basis must be the canonical lexicographic ordering");
  }
  return rho;
}

// --- partitions ---

inline json to_json(const Multipartition& mp) {
  json parts = json::array();
  for (const auto& part : mp.parts) parts.push_back(indices_to_json(part));
  return json{{"parts", std::move(parts)}};
}

// --- witness report ---

inline json to_json(const WitnessReport& rep) {
  return json{{"g", rep.g},
              {"method", rep.method},
              {"lower_bound", rep.lower_bound},
              {"converged", rep.converged},
              {"partition", to_json(rep.partition)},
              {"argmax", indices_to_json(rep.argmax)},
              {"unitary", matrix_to_json(rep.achieving_unitary.entries())}};
}

// --- separability verdict ---

inline json to_json(const SeparabilityVerdict& verdict) {
  json j{{"classification", to_string(verdict.classification)}};
  j["vacuum_modes"] = indices_to_json(verdict.vacuum_modes);
  if (verdict.block_partition)
    j["block_partition"] = json{{"part_a", indices_to_json(verdict.block_partition->first)},
                                {"part_b", indices_to_json(verdict.block_partition->second)}};
  if (verdict.residual)
    j["residual"] = to_string(*verdict.residual);
  else if (verdict.residual_trivial)
    j["residual"] = "trivial-single-mode";
  j["delta"] = matrix_to_json(verdict.factorization.delta);
  j["basis_modes"] = matrix_to_json(verdict.factorization.basis.entries());
  j["block_starts"] = indices_to_json(verdict.factorization.block_starts);
  j["row_permutation"] = indices_to_json(verdict.factorization.row_permutation);
  j["rank_ambiguous"] = verdict.factorization.rank_ambiguous;
  j["gram"] = matrix_to_json(verdict.gram);
  return j;
}

inline json to_json(const MiqeCertification& cert) {
  return json{{"fidelity", cert.fidelity},
              {"threshold", cert.threshold},
              {"certified", cert.certified}};
}

}  // namespace miqe
