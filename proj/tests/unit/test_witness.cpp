#include <doctest.h>

#include <cmath>

#include "miqe/fock.hpp"
#include "miqe/witness.hpp"
#include "support/generators.hpp"

using namespace miqe;

namespace {
const double lambda_opt = std::sqrt(2.0 * (1.0 + std::sqrt(2.0)));
const Bipartition split01{{0}, {1}};
}  // namespace

TEST_CASE("schmidt_spectrum of the two-photon family across the mode cut") {
  for (const double lambda : {0.8, lambda_opt, 3.0}) {
    const FockStateN psi = build_state(ExcitationMatrix::two_photon_family(cx(lambda)));
    const SchmidtSpectrum s = schmidt_spectrum(psi, split01);
    REQUIRE(s.weights.size() == 2);
    const double d = 2.0 + lambda * lambda;
    const double big = std::max(2.0, lambda * lambda) / d;
    const double small = std::min(2.0, lambda * lambda) / d;
    CHECK(s.weights[0] == doctest::Approx(big).epsilon(1e-12));
    CHECK(s.weights[1] == doctest::Approx(small).epsilon(1e-12));
  }
}

TEST_CASE("schmidt_spectrum degenerate cases") {
  CHECK(schmidt_spectrum(FockStateN::basis_ket({1, 1}), split01).weights ==
        std::vector<double>{1.0});

  const double s = 1.0 / std::sqrt(2.0);
  const FockStateN noon(2, 2, AmplitudeMap{{{2, 0}, cx(s)}, {{0, 2}, cx(s)}});
  const SchmidtSpectrum bell = schmidt_spectrum(noon, split01);
  REQUIRE(bell.weights.size() == 2);
  CHECK(bell.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bell.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("separable_bound is the top Schmidt weight") {
  const FockStateN opt = build_state(ExcitationMatrix::two_photon_family(cx(lambda_opt)));
  const WitnessReport rep = separable_bound(opt, split01);
  CHECK(rep.g == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(rep.method == "svd");
  CHECK(rep.argmax == std::vector<int>{0});

  CHECK(separable_bound(FockStateN::basis_ket({2, 0}), split01).g ==
        doctest::Approx(1.0).epsilon(1e-12));

  const double s = 1.0 / std::sqrt(2.0);
  const FockStateN noon(2, 2, AmplitudeMap{{{2, 0}, cx(s)}, {{0, 2}, cx(s)}});
  CHECK(separable_bound(noon, split01).argmax.size() == 2);  // tie reported
}

TEST_CASE("separable_bound reaches one for the rotated three-mode example") {
  Eigen::MatrixXcd g(2, 3);
  g << 1, 0, 0, 1, 1, 1;
  const double s = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXcd u(3, 3);
  u << 1, 0, 0, 0, s, -s, 0, s, s;
  const FockStateN rotated = transform_state(build_state(ExcitationMatrix(g)), ModeUnitary(u));
  const WitnessReport rep = separable_bound(rotated, Bipartition::of({0, 1}, 3));
  CHECK(rep.g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bipartition and multipartition validation") {
  CHECK_THROWS_AS(Bipartition{}.validate(2), std::invalid_argument);
  CHECK_THROWS_AS((Bipartition{{0}, {0, 1}}).validate(2), std::invalid_argument);
  CHECK_THROWS_AS((Bipartition{{0}, {2}}).validate(2), std::invalid_argument);
  CHECK_THROWS_AS((Bipartition{{0}, {1}}).validate(3), std::invalid_argument);
  CHECK(all_bipartitions(3).size() == 3);
  CHECK(all_bipartitions(4).size() == 7);
  CHECK_THROWS_AS(Multipartition::full_split(1).validate(1), std::invalid_argument);
}

TEST_CASE("closed-form Schmidt coefficients at reference points") {
  const cx lambda(1.4, 0.6);
  SUBCASE("identity rotation returns the family amplitudes") {
    const TwoPhotonSchmidt c = two_photon_schmidt_coeffs(lambda, cx(1.0), cx(0.0));
    const double denom = std::sqrt(2.0 + std::norm(lambda));
    CHECK(std::abs(c.c20 - std::sqrt(2.0) / denom) <= 1e-15);
    CHECK(std::abs(c.c11 - lambda / denom) <= 1e-15);
    CHECK(std::abs(c.c02) <= 1e-15);
  }
  SUBCASE("lambda -> 0 recovers the parallel-photon pattern") {
    const double theta = 0.37;
    const double t = std::cos(theta), r = std::sin(theta);
    const TwoPhotonSchmidt c = two_photon_schmidt_coeffs(cx(0.0), cx(t), cx(r));
    CHECK(std::abs(c.c20 - t * t) <= 1e-15);
    CHECK(std::abs(c.c11 - std::sqrt(2.0) * t * r) <= 1e-15);
    CHECK(std::abs(c.c02 - r * r) <= 1e-15);
  }
  SUBCASE("squared moduli always sum to one") {
    const TwoPhotonSchmidt c = two_photon_schmidt_coeffs(lambda, cx(0.6, 0.0), cx(0.8, 0.0));
    CHECK(std::norm(c.c20) + std::norm(c.c11) + std::norm(c.c02) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("non-unit coefficients rejected") {
    CHECK_THROWS_AS(two_photon_schmidt_coeffs(lambda, cx(1.0), cx(0.1)), std::invalid_argument);
  }
}

TEST_CASE("closed-form coefficients equal the transformed amplitudes for real rotations") {
  auto rng = testsupport::make_rng(811);
  std::uniform_real_distribution<double> angle(0.0, 3.141592653589793);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const cx lambda(normal(rng), normal(rng));
    const double theta = angle(rng);
    const double t = std::cos(theta), r = std::sin(theta);
    const FockStateN rotated = transform_state(
        build_state(ExcitationMatrix::two_photon_family(lambda)), ModeUnitary::two_mode(t, r));
    const TwoPhotonSchmidt c = two_photon_schmidt_coeffs(lambda, cx(t), cx(r));
    CHECK(std::abs(c.c20 - rotated.amplitude({2, 0})) <= 1e-12);
    CHECK(std::abs(c.c11 - rotated.amplitude({1, 1})) <= 1e-12);
    CHECK(std::abs(c.c02 - rotated.amplitude({0, 2})) <= 1e-12);
  }
}

TEST_CASE("two_photon_weights trigonometric surfaces") {
  SUBCASE("theta = 0 reduces to the unrotated weights") {
    const double lambda = 1.9;
    const TwoPhotonWeights w = two_photon_weights(lambda, 0.0);
    const double d = 2.0 + lambda * lambda;
    CHECK(w.l20 == doctest::Approx(2.0 / d).epsilon(1e-12));
    CHECK(w.l02 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w.l11 == doctest::Approx(lambda * lambda / d).epsilon(1e-12));
  }
  SUBCASE("weights match the squared closed-form coefficients") {
    auto rng = testsupport::make_rng(4242);
    std::uniform_real_distribution<double> angle(0.0, 3.141592653589793);
    std::uniform_real_distribution<double> lam(-4.0, 4.0);
    for (int trial = 0; trial < 40; ++trial) {
      const double lambda = lam(rng), theta = angle(rng);
      const TwoPhotonWeights w = two_photon_weights(lambda, theta);
      const TwoPhotonSchmidt c =
          two_photon_schmidt_coeffs(cx(lambda), cx(std::cos(theta)), cx(std::sin(theta)));
      CHECK(std::abs(w.l20 - std::norm(c.c20)) <= 1e-12);
      CHECK(std::abs(w.l02 - std::norm(c.c02)) <= 1e-12);
      CHECK(std::abs(w.l11 - std::norm(c.c11)) <= 1e-12);
      CHECK(w.l20 + w.l02 + w.l11 == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("two_photon_weights agree with the SVD route at a reference angle") {
  const double lambda = 1.0, theta = std::acos(-1.0) / 8.0;
  const TwoPhotonWeights w = two_photon_weights(lambda, theta);
  const FockStateN rotated =
      transform_state(build_state(ExcitationMatrix::two_photon_family(cx(lambda))),
                      ModeUnitary::two_mode(std::cos(theta), std::sin(theta)));
  std::vector<double> closed{w.l20, w.l02, w.l11};
  std::sort(closed.rbegin(), closed.rend());
  const SchmidtSpectrum s = schmidt_spectrum(rotated, split01);
  REQUIRE(s.weights.size() <= 3);
  for (std::size_t i = 0; i < s.weights.size(); ++i)
    CHECK(std::abs(closed[i] - s.weights[i]) <= 1e-12);
}

TEST_CASE("two_photon_mi_bound closed form") {
  CHECK(two_photon_mi_bound(lambda_opt) ==
        doctest::Approx((2.0 + std::sqrt(2.0)) / 4.0).epsilon(1e-15));
  CHECK(two_photon_mi_bound(std::sqrt(2.0)) ==
        doctest::Approx(0.5 + std::sqrt(3.0) / 4.0).epsilon(1e-15));
  CHECK(two_photon_mi_bound(1.0) == doctest::Approx(0.5 + std::sqrt(2.0) / 3.0).epsilon(1e-15));
  CHECK(two_photon_mi_bound(-1.0) == two_photon_mi_bound(1.0));  // magnitude only
  CHECK_THROWS_AS(two_photon_mi_bound(0.0), std::invalid_argument);
}

TEST_CASE("optimal_two_photon constants and branch crossing") {
  const OptimalTwoPhoton opt = optimal_two_photon();
  CHECK(opt.lambda == doctest::Approx(2.1973682269356216).epsilon(1e-15));
  CHECK(opt.bound == doctest::Approx(0.8535533905932737).epsilon(1e-15));
  const double d = 2.0 + opt.lambda * opt.lambda;
  const double branch_a = 0.5 + std::sqrt(1.0 + opt.lambda * opt.lambda) / d;
  const double branch_b = 1.0 - 1.0 / d;
  CHECK(std::abs(branch_a - branch_b) <= 1e-12);  // the optimum sits at the crossing
}

TEST_CASE("numeric minimizer agrees with the closed-form optimum") {
  const OptimalTwoPhoton numeric = minimize_two_photon_mi_bound();
  const OptimalTwoPhoton closed = optimal_two_photon();
  CHECK(std::abs(numeric.lambda - closed.lambda) <= 1e-6);
  CHECK(std::abs(numeric.bound - closed.bound) <= 1e-9);
  CHECK_THROWS_AS(minimize_two_photon_mi_bound(1.0, 0.5), std::invalid_argument);
}
