// Copyright 2026 The tokenscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tokenscale/cli.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "text_util.h"
#include "tokenscale/allocator.h"
#include "tokenscale/benchmark_data.h"
#include "tokenscale/errors.h"
#include "tokenscale/flops_model.h"
#include "tokenscale/quecc.h"
#include "tokenscale/quecc_check.h"
#include "tokenscale/scaling_law.h"

namespace tokenscale {
namespace {

using internal::FormatDouble;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw IoError("write to '" + path + "' failed");
}

ScalingLaw LoadLaw(const std::string& path) {
  return ParseFitResult(ReadFile(path)).law;
}

struct Options {
  // fit
  std::string data;
  std::string out;
  int refine = 3;
  int points_per_axis = 21;
  double split = 0.0;
  // shared by planners
  std::string law;
  std::string budget = "1e12";
  std::int64_t text_tokens = 0;
  std::int64_t gen_tokens = 0;
  bool cached = false;
  std::string token_grid;
  bool continuous = false;
  double k = kDefaultFlopsPerParamToken;
  double min_params_b = 0.0;
  std::string q_range;
  std::string budgets;
  // predict
  double params_b = 0.0;
  double tokens = 0.0;
  // flops
  std::string params;
  std::int64_t visual_tokens = 0;
  // quecc-check
  std::size_t n = 576;
  std::size_t d = 8;
  std::size_t s = 24;
  std::uint64_t seed = 7;
  std::string dump_dir;
};

AllocationProblem MakeProblem(const Options& o) {
  AllocationProblem problem;
  problem.law = LoadLaw(o.law);
  problem.budget = ParseQuantity(o.budget);
  problem.text_tokens = o.text_tokens;
  problem.gen_tokens = o.gen_tokens;
  problem.cached = o.cached;
  problem.flops_per_param_token = o.k;
  problem.min_llm_params_b = o.min_params_b;
  if (!o.token_grid.empty()) {
    problem.token_grid = ParseIntList(o.token_grid);
    problem.v_max = std::max(problem.v_max, problem.token_grid.back());
  }
  return problem;
}

void CmdFit(const Options& o, std::ostream& out) {
  std::istringstream in(ReadFile(o.data));
  const auto points = AggregateError(IngestRecords(in));
  FitGrid grid;
  grid.refine_rounds = o.refine;
  grid.points_per_axis = o.points_per_axis;
  std::vector<AggregatedPoint> fit_points = points;
  std::vector<AggregatedPoint> holdout;
  if (o.split > 0.0) {
    auto split = SplitByParams(points, o.split);
    fit_points = std::move(split.fit);
    holdout = std::move(split.holdout);
  }
  const FitResult result = FitGridSearch(fit_points, grid);
  const std::string doc = SerializeFitResult(result);
  if (!o.out.empty()) WriteFile(o.out, doc);
  out << doc;
  if (!holdout.empty()) {
    out << "extrapolation_error=" << FormatDouble(ExtrapolationError(result, holdout))
        << '\n';
  }
}

void CmdPredict(const Options& o, std::ostream& out) {
  const ScalingLaw law = LoadLaw(o.law);
  out << "pred_error=" << FormatDouble(Evaluate(law, o.params_b, o.tokens)) << '\n';
}

void CmdOptimize(const Options& o, std::ostream& out) {
  const AllocationProblem problem = MakeProblem(o);
  const Allocation a = OptimalAllocationDiscrete(problem);
  out << "visual_tokens=" << FormatDouble(a.visual_tokens) << '\n'
      << "n_billions=" << FormatDouble(a.llm_params_b) << '\n'
      << "pred_error=" << FormatDouble(a.predicted_error) << '\n'
      << "flops=" << FormatDouble(a.flops) << '\n';
  if (o.continuous) {
    out << "v_continuous="
        << FormatDouble(OptimalTokensContinuous(
               problem.law, static_cast<double>(problem.EffectiveTextTokens()),
               static_cast<double>(problem.v_min),
               static_cast<double>(problem.v_max)))
        << '\n';
  }
}

void CmdSweep(const Options& o, std::ostream& out) {
  const auto q_values = ParseRange(o.q_range);
  const auto rows = TokenVsQSweep(q_values, MakeProblem(o));
  std::ostringstream csv;
  WriteSweepCsv(csv, rows);
  if (o.out.empty()) {
    out << csv.str();
  } else {
    WriteFile(o.out, csv.str());
  }
}

void CmdFrontier(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<double> budgets;
  for (std::string_view part : internal::Split(o.budgets, ',')) {
    budgets.push_back(ParseQuantity(part));
  }
  const ParetoFrontier frontier = ComputeParetoFrontier(budgets, MakeProblem(o));
  for (const SkippedBudget& s : frontier.skipped) {
    err << "warning: skipped budget " << FormatDouble(s.budget) << ": "
        << s.reason << '\n';
  }
  std::ostringstream csv;
  WriteFrontierCsv(csv, frontier);
  if (o.out.empty()) {
    out << csv.str();
  } else {
    WriteFile(o.out, csv.str());
  }
}

void CmdFlops(const Options& o, std::ostream& out) {
  InferenceConfig config;
  config.llm_params = ParseQuantity(o.params);
  config.text_tokens = o.text_tokens;
  config.visual_tokens = o.visual_tokens;
  config.generated_tokens = o.gen_tokens;
  config.prompt_cached = o.cached;
  out << FormatDouble(InferenceFlops(config, o.k)) << '\n';
}

int CmdQueccCheck(const Options& o, std::ostream& out) {
  const QueccCheckReport r = RunQueccCheck(o.n, o.d, o.s, o.seed);
  out << "n=" << r.n << '\n'
      << "d=" << r.d << '\n'
      << "s=" << r.stride << '\n'
      << "m=" << r.m << '\n'
      << "shape_table=" << (r.shape_table_ok ? "pass" : "fail") << '\n'
      << "softmax_max_dev=" << FormatDouble(r.softmax_max_dev) << '\n'
      << "identical_region_max_dev=" << FormatDouble(r.identical_region_max_dev)
      << '\n'
      << "permutation_max_dev=" << FormatDouble(r.permutation_max_dev) << '\n'
      << "parallel_matches_serial="
      << (r.parallel_matches_serial ? "true" : "false") << '\n'
      << "grad_max_rel_error=" << FormatDouble(r.grad_max_rel_error) << '\n'
      << "grad_worst_tensor=" << r.grad_worst_tensor << '\n'
      << "status=" << (r.Passed() ? "pass" : "fail") << '\n';
  if (!o.dump_dir.empty()) {
    const ProjectorDims dims{o.d, o.d, o.d, o.d, o.s};
    const Matrix x = RandomMatrix(o.n, o.d, o.seed + 1, -1.0, 1.0);
    const Matrix text = RandomMatrix(1, o.d, o.seed + 2, -1.0, 1.0);
    const ForwardTrace t =
        QueccForwardTrace(x, text.row(0), RandomWeights(dims, o.seed));
    const std::pair<const char*, const Matrix*> tensors[] = {
        {"injected", &t.injected}, {"downsampled", &t.downsampled},
        {"attention", &t.attention}, {"attended", &t.attended},
        {"output", &t.output}};
    for (const auto& [name, m] : tensors) {
      std::ostringstream csv;
      WriteMatrixCsv(csv, *m);
      WriteFile(o.dump_dir + "/" + name + ".csv", csv.str());
    }
  }
  return r.Passed() ? kExitOk : kExitValidation;
}

}  // namespace

double ParseQuantity(std::string_view text) {
  std::string_view body = internal::Trim(text);
  double multiplier = 1.0;
  if (!body.empty()) {
    switch (body.back()) {
      case 'k': case 'K': multiplier = 1e3; break;
      case 'm': case 'M': multiplier = 1e6; break;
      case 'b': case 'B': case 'g': case 'G': multiplier = 1e9; break;
      case 't': case 'T': multiplier = 1e12; break;
      default: break;
    }
    if (multiplier != 1.0) body.remove_suffix(1);
  }
  const auto value = internal::ParseDouble(body);
  if (!value || !std::isfinite(*value)) {
    throw ValidationError("bad quantity '" + std::string(text) + "'");
  }
  return *value * multiplier;
}

std::vector<std::int64_t> ParseIntList(std::string_view text) {
  std::vector<std::int64_t> values;
  for (std::string_view part : internal::Split(text, ',')) {
    const auto v = internal::ParseInt(part);
    if (!v || *v < 1) {
      throw ValidationError("bad integer list '" + std::string(text) + "'");
    }
    values.push_back(*v);
  }
  return values;
}

std::vector<std::int64_t> ParseRange(std::string_view text) {
  const auto parts = internal::Split(text, ':');
  if (parts.size() != 3) {
    throw ValidationError("range must be lo:hi:step, got '" + std::string(text) + "'");
  }
  const auto lo = internal::ParseInt(parts[0]);
  const auto hi = internal::ParseInt(parts[1]);
  const auto step = internal::ParseInt(parts[2]);
  if (!lo || !hi || !step || *step <= 0 || *lo < 0 || *hi < *lo) {
    throw ValidationError("bad range '" + std::string(text) + "'");
  }
  std::vector<std::int64_t> values;
  for (std::int64_t q = *lo; q <= *hi; q += *step) values.push_back(q);
  return values;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Token/parameter scaling-law fitting and inference planning"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Fit the scaling law to benchmark CSV");
  fit->add_option("--data", o.data, "Benchmark record CSV")->required();
  fit->add_option("--out", o.out, "Where to write the fitted law");
  fit->add_option("--refine", o.refine, "Refinement rounds");
  fit->add_option("--points-per-axis", o.points_per_axis, "Grid points per axis");
  fit->add_option("--split", o.split,
                  "Fit on N <= split (billions), report error on the rest");

  auto* predict = app.add_subcommand("predict", "Evaluate a law at (N, T)");
  predict->add_option("--law", o.law)->required();
  predict->add_option("--params-b", o.params_b, "LLM size in billions")->required();
  predict->add_option("--tokens", o.tokens, "Visual tokens")->required();

  auto add_planner_flags = [&](CLI::App* cmd) {
    cmd->add_option("--law", o.law)->required();
    cmd->add_option("--text-tokens", o.text_tokens, "Q");
    cmd->add_option("--gen-tokens", o.gen_tokens, "G");
    cmd->add_flag("--cached", o.cached, "Text prompt is cached");
    cmd->add_option("--token-grid", o.token_grid, "Comma-separated V choices");
    cmd->add_option("--k", o.k, "FLOPs per parameter per token");
    cmd->add_option("--min-params-b", o.min_params_b,
                    "Smallest usable LLM size in billions");
  };

  auto* optimize = app.add_subcommand("optimize", "Compute-optimal (N, V)");
  add_planner_flags(optimize);
  optimize->add_option("--budget", o.budget, "FLOPs budget")->required();
  optimize->add_flag("--continuous", o.continuous, "Also print closed-form V*");

  auto* sweep = app.add_subcommand("sweep", "Optimal V as a function of Q");
  add_planner_flags(sweep);
  sweep->add_option("--budget", o.budget, "FLOPs budget")->required();
  sweep->add_option("--q-range", o.q_range, "lo:hi:step")->required();
  sweep->add_option("--out", o.out, "CSV destination (default stdout)");

  auto* frontier = app.add_subcommand("frontier", "Pareto frontier over budgets");
  add_planner_flags(frontier);
  frontier->add_option("--budgets", o.budgets, "Ascending comma-separated FLOPs")
      ->required();
  frontier->add_option("--out", o.out, "CSV destination (default stdout)");

  auto* flops = app.add_subcommand("flops", "Inference FLOPs of one config");
  flops->add_option("--params", o.params, "LLM parameters, e.g. 7b")->required();
  flops->add_option("--text-tokens", o.text_tokens, "Q");
  flops->add_option("--visual-tokens", o.visual_tokens, "V");
  flops->add_option("--gen-tokens", o.gen_tokens, "G");
  flops->add_flag("--cached", o.cached, "Text prompt is cached");
  flops->add_option("--k", o.k, "FLOPs per parameter per token");

  auto* quecc = app.add_subcommand("quecc-check", "Projector self-checks");
  quecc->add_option("--n", o.n, "Input tokens (perfect square)");
  quecc->add_option("--d", o.d, "Embedding width");
  quecc->add_option("--s", o.s, "Downsampling stride");
  quecc->add_option("--seed", o.seed, "Weight seed");
  quecc->add_option("--dump-dir", o.dump_dir, "Write intermediate tensors here");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("tokenscale");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (fit->parsed()) CmdFit(o, out);
    if (predict->parsed()) CmdPredict(o, out);
    if (optimize->parsed()) CmdOptimize(o, out);
    if (sweep->parsed()) CmdSweep(o, out);
    if (frontier->parsed()) CmdFrontier(o, out, err);
    if (flops->parsed()) CmdFlops(o, out);
    if (quecc->parsed()) {
      const int code = CmdQueccCheck(o, out);
      if (code != kExitOk) err << "error: projector checks failed\n";
      return code;
    }
  } catch (const ParseError& e) {
    err << "error: parse: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: io: " << e.what() << '\n';
    return kExitIo;
  } catch (const UnderdeterminedFitError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const InfeasibleBudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const FlatLawError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace tokenscale
