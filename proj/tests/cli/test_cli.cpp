#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "miqe/density.hpp"
#include "miqe/fock.hpp"
#include "miqe/json_io.hpp"

namespace fs = std::filesystem;
using namespace miqe;

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = fs::temp_directory_path() / ("miqe_cli_out_" + std::to_string(counter++));
  const std::string cmd = std::string(MIQE_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream text;
  text << in.rdbuf();
  fs::remove(out);
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, text.str()};
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

const double lambda_opt = std::sqrt(2.0 * (1.0 + std::sqrt(2.0)));

std::string lambda_gamma_json(double lambda) {
  return to_json(ExcitationMatrix::two_photon_family(cx(lambda))).dump();
}

}  // namespace

TEST_CASE("build prints the amplitude table and writes readable state JSON") {
  const fs::path gamma = write_file("cli_gamma_opt.json", lambda_gamma_json(lambda_opt));
  const fs::path state = fs::temp_directory_path() / "cli_state_opt.json";
  const RunResult res = run_cli("build --gamma " + gamma.string() + " --output " + state.string());
  CHECK(res.exit_code == 0);
  CHECK(res.stdout_text.find("0.5411961") != std::string::npos);
  CHECK(res.stdout_text.find("0.840896415") != std::string::npos);

  const FockStateN loaded = state_from_json(json::parse(slurp(state)));
  CHECK(std::abs(loaded.amplitude({2, 0}) - cx(0.5411961001461971)) <= 1e-12);
  fs::remove(gamma);
  fs::remove(state);
}

TEST_CASE("build round-trips states bit-stably through files") {
  Eigen::MatrixXcd g(3, 3);
  g << 1, 0, 0, 1, 1, 0, 1, 1, -1;
  const FockStateN direct = build_state(ExcitationMatrix(g));
  const fs::path gamma = write_file("cli_gamma33.json", to_json(ExcitationMatrix(g)).dump());
  const fs::path state = fs::temp_directory_path() / "cli_state33.json";
  CHECK(run_cli("build --gamma " + gamma.string() + " --output " + state.string()).exit_code == 0);
  const FockStateN loaded = state_from_json(json::parse(slurp(state)));
  REQUIRE(loaded.amplitudes().size() == direct.amplitudes().size());
  for (const auto& [occ, amp] : direct.amplitudes()) CHECK(loaded.amplitude(occ) == amp);
  fs::remove(gamma);
  fs::remove(state);
}

TEST_CASE("build rejects malformed input with exit code 2") {
  const fs::path bad = write_file("cli_bad.json", "{ not json");
  CHECK(run_cli("build --gamma " + bad.string()).exit_code == 2);
  fs::remove(bad);

  const fs::path zero = write_file("cli_zero_row.json",
                                   R"({"gamma": [[[1,0],[0,0]],[[0,0],[0,0]]]})");
  CHECK(run_cli("build --gamma " + zero.string()).exit_code == 2);
  fs::remove(zero);

  CHECK(run_cli("build --gamma /nonexistent/path.json").exit_code == 2);
}

TEST_CASE("sweep emits deterministic CSV with the documented header") {
  const fs::path a = fs::temp_directory_path() / "cli_sweep_a.csv";
  const fs::path b = fs::temp_directory_path() / "cli_sweep_b.csv";
  const std::string cmd = "sweep --lambda 2.1973682269356216 --points 181 --output ";
  CHECK(run_cli(cmd + a.string()).exit_code == 0);
  CHECK(run_cli(cmd + b.string()).exit_code == 0);
  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  CHECK(text.rfind("# lambda=2.19736823 g_mi_closed=0.853553391", 0) == 0);
  CHECK(text.find("theta_deg,lambda_20,lambda_02,lambda_11,g_u") != std::string::npos);
  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("optimize reports the bound and its closed-form discrepancy") {
  const RunResult res = run_cli("optimize --lambda 2.1973682269356216 --seed 11");
  CHECK(res.exit_code == 0);
  const json rep = json::parse(res.stdout_text);
  CHECK(std::abs(rep["g"].get<double>() - 0.8535533905932737) <= 1e-6);
  CHECK(rep["g_closed_form"].is_number());
  CHECK(rep["discrepancy"].get<double>() <= 1e-6);
  CHECK(rep["method"] == "grid+refine");
}

TEST_CASE("optimize finds the separating rotation for the three-mode example") {
  const fs::path gamma =
      write_file("cli_gamma32.json", R"({"gamma": [[[1,0],[0,0],[0,0]],[[1,0],[1,0],[1,0]]]})");
  const RunResult res =
      run_cli("optimize --gamma " + gamma.string() + " --partition \"1,2|3\" --seed 5");
  CHECK(res.exit_code == 0);
  const json rep = json::parse(res.stdout_text);
  CHECK(rep["g"].get<double>() >= 1.0 - 1e-9);
  fs::remove(gamma);
}

TEST_CASE("certify exit codes separate certified from inconclusive") {
  const FockStateN psi = build_state(ExcitationMatrix::two_photon_family(cx(lambda_opt)));
  const DensityMatrixN pure = DensityMatrixN::from_pure(psi);
  const DensityMatrixN mixed = DensityMatrixN::maximally_mixed(2, 2);
  const fs::path gamma = write_file("cli_gamma_cert.json", lambda_gamma_json(lambda_opt));
  const std::string bound = " --g-mi 0.8535533905932737";

  const fs::path rho20 = write_file(
      "cli_rho20.json", to_json(DensityMatrixN::convex_mix(0.8, pure, mixed)).dump());
  const RunResult ok = run_cli("certify --rho " + rho20.string() + " --gamma " + gamma.string() + bound);
  CHECK(ok.exit_code == 0);
  CHECK(json::parse(ok.stdout_text)["certified"] == true);

  const fs::path rho25 = write_file(
      "cli_rho25.json", to_json(DensityMatrixN::convex_mix(0.75, pure, mixed)).dump());
  const RunResult no = run_cli("certify --rho " + rho25.string() + " --gamma " + gamma.string() + bound);
  CHECK(no.exit_code == 1);
  CHECK(json::parse(no.stdout_text)["certified"] == false);

  fs::remove(gamma);
  fs::remove(rho20);
  fs::remove(rho25);
}

TEST_CASE("classify prints verdicts with evidence and maps them to exit codes") {
  const fs::path g33 = write_file(
      "cli_g33.json", R"({"gamma": [[[1,0],[0,0],[0,0]],[[1,0],[1,0],[0,0]],[[1,0],[1,0],[-1,0]]]})");
  const RunResult insep = run_cli("classify --gamma " + g33.string());
  CHECK(insep.exit_code == 0);
  CHECK(json::parse(insep.stdout_text)["classification"] == "mi-fully-inseparable");
  fs::remove(g33);

  const fs::path g32 = write_file(
      "cli_g32.json", R"({"gamma": [[[1,0],[0,0],[0,0]],[[1,0],[1,0],[1,0]]]})");
  const RunResult vac = run_cli("classify --gamma " + g32.string());
  CHECK(vac.exit_code == 0);
  const json v = json::parse(vac.stdout_text);
  CHECK(v["classification"] == "partially-separable-vacuum");
  CHECK(v["vacuum_modes"] == json::array({3}));
  fs::remove(g32);

  const fs::path ortho = write_file("cli_ortho.json", R"({"gamma": [[[1,0],[0,0]],[[0,0],[1,0]]]})");
  CHECK(json::parse(run_cli("classify --gamma " + ortho.string()).stdout_text)["classification"] ==
        "block-separable");
  fs::remove(ortho);

  const fs::path indet =
      write_file("cli_indet.json", R"({"gamma": [[[1,0],[0,0]],[[0,0],[1,0]],[[1,0],[1,0]]]})");
  CHECK(run_cli("classify --gamma " + indet.string()).exit_code == 1);
  fs::remove(indet);
}

TEST_CASE("unknown arguments fail with the input-error code") {
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("sweep --lambda 1 --points 1").exit_code == 2);
}
