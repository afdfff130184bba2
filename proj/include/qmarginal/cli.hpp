// Copyright 2026 The qmarginal authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <random>

#include <CLI11.hpp>

#include "qmarginal/io.hpp"

namespace qmarginal::cli {

// Exit-code contract shared by every command:
// 0 = compatible / feasible, 1 = incompatible / infeasible, 2 = ambiguous or error.
inline constexpr int kExitCompatible = 0;
inline constexpr int kExitIncompatible = 1;
inline constexpr int kExitError = 2;

struct GlobalConfig {
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int dim_cap = 64;
  std::string out_path;
  std::string format = "json";
};

namespace detail {

inline double default_solver_tol() {
  if (const char* env = std::getenv("QMARGINAL_SOLVER_TOL")) {
    try {
      return std::stod(env);
    } catch (...) {
    }
  }
  return 1e-9;
}

inline SolveOptions solve_options(const GlobalConfig& cfg) {
  SolveOptions opts;
  opts.solver_tol = cfg.tol;
  opts.dim_cap = cfg.dim_cap;
  return opts;
}

inline void emit(const GlobalConfig& cfg, const std::string& text, std::ostream& fallback) {
  if (cfg.out_path.empty()) {
    fallback << text;
    if (!text.empty() && text.back() != '\n') fallback << '\n';
    return;
  }
  std::ofstream out(cfg.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + cfg.out_path);
  out << text;
}

inline int verdict_exit(Feasibility f) {
  switch (f) {
    case Feasibility::Feasible: return kExitCompatible;
    case Feasibility::Infeasible: return kExitIncompatible;
    default: return kExitError;
  }
}

/// Resolve a margin spec: "mixed" (default) or a path to a matrix JSON file.
inline DensityOperator resolve_margin(const std::string& spec, int dim) {
  if (spec.empty() || spec == "mixed") return maximally_mixed(SystemLabel{"A", dim});
  const Matrix m = io::matrix_from_json(io::load_json_file(spec));
  return DensityOperator({SystemLabel{"A", int(m.rows())}}, m);
}

inline int parse_extension_level(const std::string& spec) {
  // Accepts forms like "2-ext" or "2".
  const auto dash = spec.find('-');
  const std::string head = dash == std::string::npos ? spec : spec.substr(0, dash);
  const int n = std::stoi(head);
  if (n < 2) throw std::invalid_argument("extension level must be >= 2");
  return n;
}

inline Matrix random_psd_state(std::mt19937_64& rng, long d) {
  std::normal_distribution<double> g;
  Matrix a(d, d);
  for (long r = 0; r < d; ++r)
    for (long c = 0; c < d; ++c) a(r, c) = Complex(g(rng), g(rng));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

/// Sample an n-extendible state by symmetrizing a random extension over the
/// copy permutations and taking its first margin.
inline Matrix sample_extendible(std::mt19937_64& rng, int da, int db, int n) {
  std::vector<int> dims{da};
  for (int k = 0; k < n; ++k) dims.push_back(db);
  long dtot = da;
  for (int k = 0; k < n; ++k) dtot *= db;
  const Matrix t = random_psd_state(rng, dtot);
  Matrix sym = Matrix::Zero(dtot, dtot);
  std::vector<int> copy_perm(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) copy_perm[std::size_t(k)] = k;
  long count = 0;
  do {
    std::vector<int> perm{0};
    for (int k = 0; k < n; ++k) perm.push_back(copy_perm[std::size_t(k)] + 1);
    sym += permute_factors(t, dims, perm);
    ++count;
  } while (std::next_permutation(copy_perm.begin(), copy_perm.end()));
  sym /= double(count);
  std::vector<bool> keep(dims.size(), false);
  keep[0] = keep[1] = true;
  return partial_trace_matrix(sym, dims, keep);
}

/// Sample a compatible consistent scenario: a random joint state with its
/// A margin rotated exactly onto rho_A.
inline std::vector<Matrix> sample_consistent_scenario(std::mt19937_64& rng,
                                                      const MarginalScenario& shape) {
  const auto dims = factor_dims(shape.joint_factors());
  const Matrix t = random_psd_state(rng, dim_product(shape.joint_factors()));
  std::vector<bool> keep_a(dims.size(), false);
  keep_a[0] = true;
  const Matrix margin_a = partial_trace_matrix(t, dims, keep_a);
  Eigen::SelfAdjointEigenSolver<Matrix> es_t(margin_a), es_r(shape.margin_of(0));
  const Matrix fix = es_r.eigenvectors() *
                     es_r.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                     es_t.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                     es_t.eigenvectors().adjoint();
  long rest = 1;
  for (std::size_t i = 1; i < dims.size(); ++i) rest *= dims[i];
  const Matrix lift = kron(fix, Matrix::Identity(rest, rest));
  const Matrix fixed = lift * t * lift.adjoint();
  std::vector<Matrix> margins;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    std::vector<bool> keep(dims.size(), false);
    keep[0] = keep[k + 1] = true;
    margins.push_back(partial_trace_matrix(fixed, dims, keep));
  }
  return margins;
}

}  // namespace detail

//==============================================================================
// Command implementations
//==============================================================================

namespace detail {

inline int cmd_compat(const GlobalConfig& cfg, const std::string& file,
                      const std::string& margin_spec, std::ostream& out) {
  const io::json j = io::load_json_file(file);
  std::vector<KrausChannel> channels;
  for (const auto& cj : j.at("channels")) channels.push_back(io::channel_from_json(cj));
  if (channels.empty()) throw std::invalid_argument("no channels in input");
  const int din = channels.front().in_dim();
  DensityOperator rho_a = [&] {
    if (margin_spec.empty() && j.contains("margin") && !j.at("margin").is_null())
      return DensityOperator({SystemLabel{"A", din}}, io::matrix_from_json(j.at("margin")));
    return resolve_margin(margin_spec, din);
  }();
  const PurifiedMargin margin = canonical_purification(rho_a);
  const FeasibilityVerdict v = channel_compatible(channels, margin, solve_options(cfg));
  emit(cfg, io::to_json(v, false).dump(2), out);
  return verdict_exit(v.status);
}

inline int cmd_marginal(const GlobalConfig& cfg, const std::string& file, std::ostream& out) {
  const MarginalScenario s = io::scenario_from_json(io::load_json_file(file));
  const FeasibilityVerdict v = marginal_feasible(s, solve_options(cfg));
  emit(cfg, io::to_json(v, false).dump(2), out);
  return verdict_exit(v.status);
}

inline int cmd_robustness(const GlobalConfig& cfg, const std::string& file,
                          const std::string& free_spec, bool emit_witness, int check_witness,
                          std::ostream& out) {
  const io::json j = io::load_json_file(file);
  const SolveOptions opts = solve_options(cfg);
  io::json result;
  RobustnessResult rr;
  std::mt19937_64 rng(cfg.seed);

  if (j.contains("marginals")) {
    if (!free_spec.empty() && free_spec != "consistent")
      throw std::invalid_argument("scenario inputs use the consistent robustness");
    const MarginalScenario s = io::scenario_from_json(j);
    rr = consistent_robustness(s, opts);
    result = io::to_json(rr, emit_witness);
    if (emit_witness && rr.ok) {
      io::json games = io::json::array();
      for (const auto& w : rr.witness_blocks) games.push_back(io::to_json(witness_to_game(w)));
      result["games"] = std::move(games);
    }
    if (check_witness > 0 && rr.ok) {
      double worst = -1e300;
      for (int i = 0; i < check_witness; ++i) {
        const auto margins = sample_consistent_scenario(rng, s);
        double v = 0;
        for (std::size_t k = 0; k < margins.size(); ++k)
          v += inner(rr.witness_blocks[k].matrix, margins[k]);
        worst = std::max(worst, v);
      }
      result["witness_check"] = {{"samples", check_witness}, {"max_value", worst}};
    }
  } else {
    if (free_spec.empty() || free_spec == "consistent")
      throw std::invalid_argument("state inputs need --free <n>-ext");
    const DensityOperator rho = io::bipartite_state_from_json(j);
    const FreeSetSpec free = FreeSetSpec::n_extendible(parse_extension_level(free_spec));
    rr = generalized_robustness(rho, free, opts);
    result = io::to_json(rr, emit_witness);
    if (emit_witness && rr.ok)
      result["game"] = io::to_json(witness_to_game(rr.witness_blocks.front()));
    if (check_witness > 0 && rr.ok) {
      double worst = -1e300;
      for (int i = 0; i < check_witness; ++i) {
        const Matrix sigma = sample_extendible(rng, rho.factors[0].dim, rho.factors[1].dim,
                                               free.extensions);
        worst = std::max(worst, inner(rr.witness_blocks.front().matrix, sigma));
      }
      result["witness_check"] = {{"samples", check_witness}, {"max_value", worst}};
    }
  }
  emit(cfg, result.dump(2), out);
  if (!rr.ok) return kExitError;
  return rr.t <= opts.feas_tol ? kExitCompatible : kExitIncompatible;
}

inline int cmd_symext(const GlobalConfig& cfg, const std::string& file, int n, bool reduced,
                      std::ostream& out) {
  const DensityOperator rho = io::bipartite_state_from_json(io::load_json_file(file));
  SolveOptions opts = solve_options(cfg);
  opts.symmetric_subspace_reduction = reduced;
  const FeasibilityVerdict v = symmetric_extension(rho, n, opts);
  emit(cfg, io::to_json(v, false).dump(2), out);
  return verdict_exit(v.status);
}

inline int cmd_selfcompat(const GlobalConfig& cfg, const std::string& file,
                          const std::string& method, const std::string& margin_spec,
                          std::ostream& out) {
  const io::json j = io::load_json_file(file);
  const KrausChannel phi =
      io::channel_from_json(j.contains("channel") ? j.at("channel") : j);
  DensityOperator rho_a = [&] {
    if (margin_spec.empty() && j.contains("margin") && !j.at("margin").is_null())
      return DensityOperator({SystemLabel{"A", phi.in_dim()}},
                             io::matrix_from_json(j.at("margin")));
    return resolve_margin(margin_spec, phi.in_dim());
  }();
  const PurifiedMargin margin = canonical_purification(rho_a);
  const SolveOptions opts = solve_options(cfg);

  io::json methods;
  std::optional<bool> closed, sdp_verdict, entropic_conclusive;
  if (method == "closed-form" || method == "all") {
    if (phi.in_dim() != 2 || phi.out_dim() != 2) {
      if (method == "closed-form")
        throw std::invalid_argument("closed-form method needs a qubit channel; use --method sdp");
    } else {
      const double gap = qubit_self_compatible_gap(phi, rho_a);
      closed = gap >= -1e-12;
      methods["closed_form"] = {{"self_compatible", *closed}, {"gap", gap}};
    }
  }
  if (method == "sdp" || method == "all") {
    const ChoiState cs = choi_state(phi, margin);
    const FeasibilityVerdict v = symmetric_extension(cs.state, 2, opts);
    if (v.status != Feasibility::Ambiguous) sdp_verdict = v.status == Feasibility::Feasible;
    methods["sdp"] = io::to_json(v, false);
  }
  if (method == "entropic" || method == "all") {
    const auto [first, second] = self_compat_entropic(phi, margin);
    const bool ruled_out = std::min(first, second) < -kEntropicBand;
    if (ruled_out) entropic_conclusive = false;
    methods["entropic"] = {{"self_compatible", !ruled_out},
                           {"conclusive", ruled_out},
                           {"values", {first, second}}};
  }

  // Cross-validation: all conclusive verdicts must agree. An entropic pass
  // is not conclusive; it only decides the exit code when no conclusive
  // method ran.
  std::vector<bool> conclusive;
  if (closed) conclusive.push_back(*closed);
  if (sdp_verdict) conclusive.push_back(*sdp_verdict);
  if (entropic_conclusive) conclusive.push_back(*entropic_conclusive);
  io::json result{{"methods", std::move(methods)}};
  bool disagree = false;
  for (std::size_t i = 1; i < conclusive.size(); ++i)
    if (conclusive[i] != conclusive[0]) disagree = true;
  if (disagree) {
    result["self_compatible"] = nullptr;
    result["error"] = "methods disagree beyond tolerance";
    emit(cfg, result.dump(2), out);
    return kExitError;
  }
  std::optional<bool> verdict;
  if (!conclusive.empty())
    verdict = conclusive[0];
  else if (method == "entropic")
    verdict = true;  // witness passed; necessary conditions cannot refute
  if (!verdict) {
    result["self_compatible"] = nullptr;
    emit(cfg, result.dump(2), out);
    return kExitError;
  }
  result["self_compatible"] = *verdict;
  emit(cfg, result.dump(2), out);
  return *verdict ? kExitCompatible : kExitIncompatible;
}

inline int cmd_region(const GlobalConfig& cfg, int d, int grid, std::ostream& out) {
  const auto points = depol_region_scan(d, grid);
  std::ostringstream os;
  io::write_region_csv(points, os);
  emit(cfg, os.str(), out);
  return kExitCompatible;
}

inline int cmd_game(const GlobalConfig& cfg, const std::string& file,
                    const std::string& free_spec, std::ostream& out) {
  const DensityOperator rho = io::bipartite_state_from_json(io::load_json_file(file));
  const FreeSetSpec free =
      FreeSetSpec::n_extendible(parse_extension_level(free_spec.empty() ? "2" : free_spec));
  const GameAdvantage adv = game_advantage(rho, free, solve_options(cfg));
  io::json result{{"ratio", adv.ratio},
                  {"t", adv.robustness.t},
                  {"free", adv.robustness.free_description},
                  {"game", io::to_json(adv.game)}};
  emit(cfg, result.dump(2), out);
  return kExitCompatible;
}

}  // namespace detail

/// Entry point shared by the binary and the in-process tests.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  GlobalConfig cfg;
  cfg.tol = detail::default_solver_tol();

  CLI::App app{"quantum marginal problems, channel compatibility, and robustness"};
  app.require_subcommand(1);
  app.add_option("--tol", cfg.tol, "solver tolerance");
  app.add_option("--seed", cfg.seed, "seed for randomized validation sampling");
  app.add_option("--dim-cap", cfg.dim_cap, "largest joint dimension the solver accepts");
  app.add_option("--out", cfg.out_path, "write the result to this file instead of stdout");
  app.add_option("--format", cfg.format, "output format (json|csv)")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string compat_file, compat_margin;
  auto* compat = app.add_subcommand("compat", "decide compatibility of a channel set");
  compat->fallthrough();
  compat->add_option("channels", compat_file, "channel set JSON file")->required();
  compat->add_option("--margin", compat_margin, "input margin: 'mixed' or a matrix JSON file");

  std::string marginal_file;
  auto* marginal = app.add_subcommand("marginal", "decide an overlapping marginal problem");
  marginal->fallthrough();
  marginal->add_option("scenario", marginal_file, "scenario JSON file")->required();

  std::string rob_file, rob_free;
  bool rob_witness = false;
  int rob_check = 0;
  auto* rob = app.add_subcommand("robustness", "consistent or generalized robustness");
  rob->fallthrough();
  rob->add_option("input", rob_file, "scenario or bipartite state JSON file")->required();
  rob->add_option("--free", rob_free, "free set: consistent | <n>-ext");
  rob->add_flag("--emit-witness", rob_witness, "include witness matrices and derived games");
  rob->add_option("--check-witness", rob_check,
                  "validate the witness on this many sampled free states");

  std::string symext_file;
  int symext_n = 2;
  bool symext_reduced = false;
  auto* symext = app.add_subcommand("symext", "decide n-symmetric extendibility");
  symext->fallthrough();
  symext->add_option("state", symext_file, "bipartite state JSON file")->required();
  symext->add_option("-n,--n", symext_n, "number of extensions");
  symext->add_flag("--reduced", symext_reduced, "use the swap-invariant block reduction (n=2)");

  std::string self_file, self_method = "all", self_margin;
  auto* self = app.add_subcommand("selfcompat", "decide channel self-compatibility");
  self->fallthrough();
  self->add_option("channel", self_file, "channel JSON file")->required();
  self->add_option("--method", self_method, "closed-form | sdp | entropic | all")
      ->check(CLI::IsMember({"closed-form", "sdp", "entropic", "all"}));
  self->add_option("--margin", self_margin, "input margin: 'mixed' or a matrix JSON file");

  int region_d = 2, region_grid = 101;
  auto* region = app.add_subcommand("region", "depolarizing-pair compatibility region CSV");
  region->fallthrough();
  region->add_option("--d", region_d, "local dimension")->required();
  region->add_option("--grid", region_grid, "points per axis");

  std::string game_file, game_free;
  auto* game = app.add_subcommand("game", "correlation game realizing the robustness");
  game->fallthrough();
  game->add_option("state", game_file, "bipartite state JSON file")->required();
  game->add_option("--free", game_free, "free set: <n>-ext");

  std::vector<const char*> argv;
  args.insert(args.begin(), "qmarginal");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (compat->parsed()) return detail::cmd_compat(cfg, compat_file, compat_margin, out);
    if (marginal->parsed()) return detail::cmd_marginal(cfg, marginal_file, out);
    if (rob->parsed())
      return detail::cmd_robustness(cfg, rob_file, rob_free, rob_witness, rob_check, out);
    if (symext->parsed()) return detail::cmd_symext(cfg, symext_file, symext_n, symext_reduced, out);
    if (self->parsed()) return detail::cmd_selfcompat(cfg, self_file, self_method, self_margin, out);
    if (region->parsed()) return detail::cmd_region(cfg, region_d, region_grid, out);
    if (game->parsed()) return detail::cmd_game(cfg, game_file, game_free, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << "error: no command\n";
  return kExitError;
}

}  // namespace qmarginal::cli
