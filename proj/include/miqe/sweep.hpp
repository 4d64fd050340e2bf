#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "miqe/fock.hpp"
#include "miqe/witness.hpp"

namespace miqe {

/// Basis rotation whose first output mode is cos(theta) a1 + sin(theta) a2
/// and whose second is -sin(theta) a1 + cos(theta) a2; theta in radians.
inline ModeUnitary rotated_mode_basis(double theta) {
  return ModeUnitary::two_mode(cx(std::cos(theta)), cx(-std::sin(theta)));
}

/// Angle sweep of the separable bound for a two-mode two-photon state,
/// either the lambda family or an explicit excitation matrix.
struct SweepSpec {
  std::optional<double> lambda;
  std::optional<ExcitationMatrix> gamma;
  double theta_min_deg = 0.0;
  double theta_max_deg = 180.0;
  int steps = 721;

  void validate() const {
    if (lambda.has_value() == gamma.has_value())
      throw std::invalid_argument("specify exactly one of lambda or gamma");
    if (steps < 2) throw std::invalid_argument("sweep needs at least two steps");
    if (theta_min_deg < 0.0 || theta_max_deg > 180.0 || theta_min_deg > theta_max_deg)
      throw std::invalid_argument("angle range must lie within [0, 180] degrees");
    if (gamma && (gamma->mode_count() != 2 || gamma->photon_count() != 2))
      throw std::invalid_argument("sweeps cover two photons in two modes");
  }
};

struct SweepRow {
  double theta_deg;
  double l20;
  double l02;
  double l11;
  double g_u;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> lambda;
  std::optional<double> g_mi_closed;
  std::string source;  // echoed into the CSV header
};

inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const ExcitationMatrix gamma =
      spec.gamma ? *spec.gamma : ExcitationMatrix::two_photon_family(cx(*spec.lambda));
  const FockStateN state = build_state(gamma);
  const double pi = std::acos(-1.0);

  SweepResult result;
  result.lambda = spec.lambda;
  if (spec.lambda && *spec.lambda != 0.0) result.g_mi_closed = two_photon_mi_bound(*spec.lambda);
  result.rows.reserve(static_cast<std::size_t>(spec.steps));
  for (int i = 0; i < spec.steps; ++i) {
    const double deg =
        spec.theta_min_deg + (spec.theta_max_deg - spec.theta_min_deg) * i / (spec.steps - 1);
    const FockStateN rotated = transform_state(state, rotated_mode_basis(deg * pi / 180.0));
    SweepRow row;
    row.theta_deg = deg;
    row.l20 = std::norm(rotated.amplitude({2, 0}));
    row.l02 = std::norm(rotated.amplitude({0, 2}));
    row.l11 = std::norm(rotated.amplitude({1, 1}));
    row.g_u = std::max({row.l20, row.l02, row.l11});
    result.rows.push_back(row);
  }
  return result;
}

/// 9 significant digits, '.' decimal separator, locale-independent.
inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void write_csv(const SweepResult& result, std::ostream& os) {
  if (result.lambda) {
    os << "# lambda=" << format_g9(*result.lambda);
    if (result.g_mi_closed) os << " g_mi_closed=" << format_g9(*result.g_mi_closed);
    os << "\n";
  } else if (!result.source.empty()) {
    os << "# gamma=" << result.source << "\n";
  }
  os << "theta_deg,lambda_20,lambda_02,lambda_11,g_u\n";
  for (const auto& row : result.rows)
    os << format_g9(row.theta_deg) << ',' << format_g9(row.l20) << ',' << format_g9(row.l02)
       << ',' << format_g9(row.l11) << ',' << format_g9(row.g_u) << "\n";
}

}  // namespace miqe
