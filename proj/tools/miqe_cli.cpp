// Command-line surface for the miqe library: build states from excitation
// matrices, sweep separable bounds over basis angles, optimize
// mode-independent bounds, certify entanglement of density matrices, and
// run the algebraic separability classifier.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "miqe/density.hpp"
#include "miqe/fock.hpp"
#include "miqe/json_io.hpp"
#include "miqe/optimize.hpp"
#include "miqe/qr_separability.hpp"
#include "miqe/sweep.hpp"
#include "miqe/witness.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_inconclusive = 1;
constexpr int exit_input_error = 2;

miqe::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  miqe::json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

void emit(const std::optional<std::string>& output, const std::string& text) {
  if (output)
    write_text(*output, text);
  else
    std::cout << text;
}

/// "1,2|3" -> parts {0,1} and {2} (1-based on the wire).
std::vector<std::vector<int>> parse_partition(const std::string& text) {
  std::vector<std::vector<int>> parts;
  std::stringstream outer(text);
  std::string part;
  while (std::getline(outer, part, '|')) {
    std::vector<int> modes;
    std::stringstream inner(part);
    std::string item;
    while (std::getline(inner, item, ',')) {
      const int v = std::stoi(item);
      if (v < 1) throw std::invalid_argument("mode indices are 1-based");
      modes.push_back(v - 1);
    }
    parts.push_back(std::move(modes));
  }
  return parts;
}

struct CommonOptions {
  std::uint64_t seed = 20457;
  int grid = 0;
  int restarts = 8;
  double tol = 1e-9;
  std::string format = "table";
  std::optional<std::string> output;

  miqe::OptimizerConfig optimizer() const {
    miqe::OptimizerConfig cfg;
    cfg.seed = seed;
    cfg.grid_resolution = grid;
    cfg.restarts = restarts;
    cfg.tolerance = tol;
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_optimizer, bool with_format = false) {
  cmd->add_option("--output", opt.output, "write the result to this file instead of stdout");
  if (with_format)
    cmd->add_option("--format", opt.format, "output format: table or json")
        ->check(CLI::IsMember({"table", "json"}));
  if (with_optimizer) {
    cmd->add_option("--seed", opt.seed, "optimizer seed");
    cmd->add_option("--grid", opt.grid, "grid resolution per angle (0 = default)");
    cmd->add_option("--restarts", opt.restarts, "optimizer restarts");
    cmd->add_option("--tol", opt.tol, "optimizer tolerance");
  }
}

int run_build(const std::string& gamma_path, const CommonOptions& opt) {
  const miqe::ExcitationMatrix gamma = miqe::excitation_from_json(load_json(gamma_path));
  const miqe::FockStateN state = miqe::build_state(gamma);
  const miqe::json j = miqe::to_json(state);
  if (opt.format == "json") {
    emit(opt.output, j.dump(2) + "\n");
    return exit_ok;
  }
  std::ostringstream table;
  table << "modes=" << state.mode_count() << " photons=" << state.photon_number() << "\n";
  for (const auto& [occ, amp] : state.amplitudes()) {
    table << "|";
    for (std::size_t i = 0; i < occ.size(); ++i) table << (i ? "," : "") << occ[i];
    table << ">  " << miqe::format_g9(amp.real()) << (amp.imag() < 0 ? " - " : " + ")
          << miqe::format_g9(std::abs(amp.imag())) << "i  |amp|^2=" << miqe::format_g9(std::norm(amp))
          << "\n";
  }
  std::cout << table.str();
  if (opt.output) write_text(*opt.output, j.dump(2) + "\n");
  return exit_ok;
}

int run_sweep(const std::optional<double>& lambda, const std::optional<std::string>& gamma_path,
              double theta_min, double theta_max, int points, const CommonOptions& opt) {
  miqe::SweepSpec spec;
  spec.lambda = lambda;
  std::string source;
  if (gamma_path) {
    spec.gamma = miqe::excitation_from_json(load_json(*gamma_path));
    source = miqe::matrix_to_json(spec.gamma->entries()).dump();
  }
  spec.theta_min_deg = theta_min;
  spec.theta_max_deg = theta_max;
  spec.steps = points;
  miqe::SweepResult result = miqe::run_sweep(spec);
  result.source = source;
  std::ostringstream csv;
  miqe::write_csv(result, csv);
  emit(opt.output, csv.str());
  return exit_ok;
}

int run_optimize(const std::optional<double>& lambda, const std::optional<std::string>& gamma_path,
                 const std::optional<std::string>& state_path,
                 const std::optional<std::string>& partition_text, const CommonOptions& opt) {
  std::optional<miqe::FockStateN> state;
  if (lambda)
    state = miqe::build_state(miqe::ExcitationMatrix::two_photon_family(miqe::cx(*lambda)));
  else if (gamma_path)
    state = miqe::build_state(miqe::excitation_from_json(load_json(*gamma_path)));
  else if (state_path)
    state = miqe::state_from_json(load_json(*state_path));
  else
    throw std::invalid_argument("optimize needs --lambda, --gamma, or --state");

  std::vector<miqe::Bipartition> partitions;
  if (partition_text) {
    const auto parts = parse_partition(*partition_text);
    if (parts.size() != 2) throw std::invalid_argument("optimize expects a bipartition A|B");
    miqe::Bipartition p{parts[0], parts[1]};
    std::sort(p.part_a.begin(), p.part_a.end());
    std::sort(p.part_b.begin(), p.part_b.end());
    p.validate(state->mode_count());
    partitions.push_back(std::move(p));
  } else {
    partitions = miqe::all_bipartitions(state->mode_count());
  }

  const miqe::WitnessReport rep = miqe::mi_bound_numeric(*state, partitions, opt.optimizer());
  miqe::json j = miqe::to_json(rep);
  if (lambda && *lambda != 0.0) {
    const double closed = miqe::two_photon_mi_bound(*lambda);
    j["g_closed_form"] = closed;
    j["discrepancy"] = std::abs(rep.g - closed);
  }
  emit(opt.output, j.dump(2) + "\n");
  return exit_ok;
}

int run_certify(const std::string& rho_path, const std::optional<std::string>& psi_path,
                const std::optional<std::string>& gamma_path, double g_mi,
                const CommonOptions& opt) {
  const miqe::DensityMatrixN rho = miqe::density_from_json(load_json(rho_path));
  std::optional<miqe::FockStateN> psi;
  if (psi_path)
    psi = miqe::state_from_json(load_json(*psi_path));
  else if (gamma_path)
    psi = miqe::build_state(miqe::excitation_from_json(load_json(*gamma_path)));
  else
    throw std::invalid_argument("certify needs --psi or --gamma");
  const miqe::MiqeCertification cert = miqe::certify_miqe(rho, *psi, g_mi);
  emit(opt.output, miqe::to_json(cert).dump(2) + "\n");
  return cert.certified ? exit_ok : exit_inconclusive;
}

int run_classify(const std::string& gamma_path, const CommonOptions& opt) {
  const miqe::ExcitationMatrix gamma = miqe::excitation_from_json(load_json(gamma_path));
  const miqe::SeparabilityVerdict verdict = miqe::classify_separability(gamma);
  emit(opt.output, miqe::to_json(verdict).dump(2) + "\n");
  return verdict.classification == miqe::Separability::indeterminate ? exit_inconclusive : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mode-independent entanglement toolkit for fixed-photon-number multimode light"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "build a normalized state from an excitation matrix");
  std::string build_gamma;
  CommonOptions build_opt;
  build->add_option("--gamma", build_gamma, "excitation matrix JSON file")->required();
  add_common(build, build_opt, false, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "sweep the separable bound over basis angles (CSV)");
  std::optional<double> sweep_lambda;
  std::optional<std::string> sweep_gamma;
  double theta_min = 0.0, theta_max = 180.0;
  int points = 721;
  CommonOptions sweep_opt;
  auto* sl = sweep->add_option("--lambda", sweep_lambda, "two-photon family parameter");
  sweep->add_option("--gamma", sweep_gamma, "excitation matrix JSON file")->excludes(sl);
  sweep->add_option("--theta-min", theta_min, "sweep start in degrees");
  sweep->add_option("--theta-max", theta_max, "sweep end in degrees");
  sweep->add_option("--points", points, "number of grid angles");
  add_common(sweep, sweep_opt, false);

  // optimize
  auto* optimize = app.add_subcommand("optimize", "numeric mode-independent separable bound");
  std::optional<double> opt_lambda;
  std::optional<std::string> opt_gamma, opt_state, opt_partition;
  CommonOptions opt_opt;
  auto* ol = optimize->add_option("--lambda", opt_lambda, "two-photon family parameter");
  auto* og = optimize->add_option("--gamma", opt_gamma, "excitation matrix JSON file")->excludes(ol);
  optimize->add_option("--state", opt_state, "state JSON file")->excludes(ol)->excludes(og);
  optimize->add_option("--partition", opt_partition, "bipartition, e.g. \"1,2|3\" (default: all)");
  add_common(optimize, opt_opt, true);

  // certify
  auto* certify = app.add_subcommand("certify", "certify entanglement of a density matrix");
  std::string rho_path;
  std::optional<std::string> psi_path, certify_gamma;
  double g_mi = 0.0;
  CommonOptions certify_opt;
  certify->add_option("--rho", rho_path, "density matrix JSON file")->required();
  auto* cp = certify->add_option("--psi", psi_path, "target state JSON file");
  certify->add_option("--gamma", certify_gamma, "excitation matrix for the target state")->excludes(cp);
  certify->add_option("--g-mi", g_mi, "separable bound to beat")->required();
  add_common(certify, certify_opt, false);

  // classify
  auto* classify = app.add_subcommand("classify", "algebraic separability classification");
  std::string classify_gamma;
  CommonOptions classify_opt;
  classify->add_option("--gamma", classify_gamma, "excitation matrix JSON file")->required();
  add_common(classify, classify_opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input_error;
  }

  try {
    if (build->parsed()) return run_build(build_gamma, build_opt);
    if (sweep->parsed())
      return run_sweep(sweep_lambda, sweep_gamma, theta_min, theta_max, points, sweep_opt);
    if (optimize->parsed())
      return run_optimize(opt_lambda, opt_gamma, opt_state, opt_partition, opt_opt);
    if (certify->parsed()) return run_certify(rho_path, psi_path, certify_gamma, g_mi, certify_opt);
    if (classify->parsed()) return run_classify(classify_gamma, classify_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_input_error;
  }
  return exit_input_error;
}
