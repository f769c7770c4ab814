// Copyright 2026 The margsyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// margsyn command-line interface.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "margsyn/bounds.hpp"
#include "margsyn/config.hpp"
#include "margsyn/dataset.hpp"
#include "margsyn/error.hpp"
#include "margsyn/eval.hpp"
#include "margsyn/learn.hpp"
#include "margsyn/marginals.hpp"
#include "margsyn/polyapprox.hpp"
#include "margsyn/privacy.hpp"
#include "margsyn/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace margsyn;

namespace {

constexpr int kExitIncomplete = 3;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write " + out_path);
  out << text << '\n';
}

double parse_tau(const std::string& s) {
  if (s == "inf") return kUnbounded;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw InvalidArgument("tau must be a number or 'inf'");
  }
}

LossSpec make_loss(const std::string& kind, double gamma) {
  if (kind == "logistic") return LossSpec::logistic();
  if (kind == "phi_gamma") return LossSpec::phi_gamma(gamma);
  throw InvalidArgument("unknown loss '" + kind + "' (expected logistic or phi_gamma)");
}

RealFunction named_function(const std::string& name) {
  if (name == "logistic_loss") return [](double x) { return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); };
  if (name == "sigmoid") return [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  if (name == "abs") return [](double x) { return std::abs(x); };
  if (name == "exp") return [](double x) { return std::exp(x); };
  throw InvalidArgument("unknown function '" + name + "' (expected logistic_loss, sigmoid, abs or exp)");
}

struct DataArgs {
  std::string data;
  std::string schema;
  void add(CLI::App* cmd) {
    cmd->add_option("--data", data, "Coded dataset CSV")->required();
    cmd->add_option("--schema", schema, "Schema JSON")->required();
  }
  Dataset load() const { return load_csv(data, load_schema(schema)); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private marginal-based synthetic data and excess-risk bounds"};
  app.require_subcommand(1);

  // ---- preprocess ----
  auto* pre = app.add_subcommand("preprocess", "Code a raw CSV with column rules");
  std::string pre_raw, pre_rules, pre_out, pre_schema_out;
  pre->add_option("--raw", pre_raw, "Raw CSV with a header row")->required();
  pre->add_option("--rules", pre_rules, "Column rules JSON")->required();
  pre->add_option("--out", pre_out, "Coded CSV output")->required();
  pre->add_option("--schema-out", pre_schema_out, "Schema JSON output")->required();

  // ---- synth ----
  auto* syn = app.add_subcommand("synth", "Measure noisy marginals and generate a synthetic dataset");
  DataArgs syn_data;
  syn_data.add(syn);
  std::size_t syn_d = 2;
  PrivacyParams syn_priv;
  std::string syn_mode = "fitted", syn_sens = "exact", syn_out, syn_report, syn_marginals;
  std::uint64_t syn_seed = 0;
  std::optional<double> syn_sigma;
  bool syn_diag = false;
  BruteForceOptions syn_brute;
  FitOptions syn_fit;
  syn->add_option("--d", syn_d, "Marginal order");
  syn->add_option("--epsilon", syn_priv.epsilon, "Privacy epsilon");
  syn->add_option("--delta", syn_priv.delta, "Privacy delta");
  syn->add_option("--lambda", syn_priv.lambda, "Confidence exponent for the l1 bound");
  syn->add_flag("--allow-large-epsilon", syn_priv.allow_large_epsilon, "Accept epsilon > 1");
  syn->add_option("--mode", syn_mode, "brute or fitted");
  syn->add_option("--sensitivity", syn_sens, "exact or paper");
  syn->add_option("--seed", syn_seed, "Seed");
  syn->add_option("--sigma-override", syn_sigma, "Replace the calibrated noise scale (testing)");
  syn->add_option("--enumeration-cap", syn_brute.enumeration_cap, "Largest multiset count to enumerate");
  syn->add_option("--max-search-nodes", syn_brute.max_search_nodes, "Relaxation budget above the cap");
  syn->add_option("--fit-iters", syn_fit.iters, "Fitting iterations");
  syn->add_option("--fit-tol", syn_fit.tol, "Fitting relative tolerance");
  syn->add_option("--out", syn_out, "Synthetic CSV output")->required();
  syn->add_option("--report", syn_report, "Provenance report JSON (default stdout)");
  syn->add_option("--save-marginals", syn_marginals, "Directory for the released noisy marginals");
  syn->add_flag("--diagnostics", syn_diag, "Add non-private l1 against the real marginals to the report");

  // ---- train ----
  auto* trn = app.add_subcommand("train", "Norm-constrained empirical risk minimization");
  DataArgs trn_data;
  trn_data.add(trn);
  std::string trn_loss = "logistic", trn_tau = "inf", trn_out;
  double trn_gamma = 0.5;
  TrainConfig trn_cfg;
  trn->add_option("--loss", trn_loss, "logistic or phi_gamma");
  trn->add_option("--gamma", trn_gamma, "phi_gamma parameter");
  trn->add_option("--tau", trn_tau, "Norm budget, or inf");
  trn->add_option("--max-iters", trn_cfg.max_iters);
  trn->add_option("--step-size", trn_cfg.step_size);
  trn->add_option("--decay", trn_cfg.decay);
  trn->add_option("--tolerance", trn_cfg.tolerance);
  trn->add_option("--seed", trn_cfg.seed);
  trn->add_option("--out", trn_out, "Model JSON output")->required();

  // ---- dpsgd ----
  auto* dps = app.add_subcommand("dpsgd", "Differentially private SGD baseline");
  DataArgs dps_data;
  dps_data.add(dps);
  std::string dps_loss = "logistic", dps_out;
  double dps_gamma = 0.5;
  DpSgdConfig dps_cfg;
  std::uint64_t dps_seed = 0;
  dps->add_option("--loss", dps_loss, "logistic or phi_gamma");
  dps->add_option("--gamma", dps_gamma, "phi_gamma parameter");
  dps->add_option("--T", dps_cfg.T, "Iterations");
  dps->add_option("--B", dps_cfg.B, "Batch size");
  dps->add_option("--eta", dps_cfg.eta, "Learning rate");
  dps->add_option("--C", dps_cfg.C, "Clip norm");
  dps->add_option("--L", dps_cfg.L, "Lipschitz constant");
  dps->add_option("--epsilon", dps_cfg.epsilon);
  dps->add_option("--delta", dps_cfg.delta);
  dps->add_option("--seed", dps_seed);
  dps->add_option("--out", dps_out, "Model JSON output")->required();

  // ---- eval ----
  auto* evl = app.add_subcommand("eval", "Accuracy, ROC-AUC and empirical risk of a model");
  DataArgs evl_data;
  evl_data.add(evl);
  std::string evl_model, evl_reference, evl_out;
  evl->add_option("--model", evl_model, "Model JSON")->required();
  evl->add_option("--reference-model", evl_reference, "Model for the excess-risk baseline");
  evl->add_option("--out", evl_out, "Metrics JSON (default stdout)");

  // ---- bound ----
  auto* bnd = app.add_subcommand("bound", "Excess-risk bound calculators");
  std::string bnd_params, bnd_kind = "generic", bnd_mode = "explicit", bnd_sens = "exact", bnd_out;
  BoundInputs bin;
  std::string bnd_tau = "1";
  bool bnd_sigma_set = false;
  bnd->add_option("--params", bnd_params, "Parameter JSON (keys as the flags)");
  bnd->add_option("--kind", bnd_kind, "generic, logistic, private-generic, private-logistic or lower");
  bnd->add_option("--mode", bnd_mode, "explicit or asymptotic");
  bnd->add_option("--n", bin.n);
  bnd->add_option("--m", bin.m);
  bnd->add_option("--d", bin.d);
  bnd->add_option("--l", bin.l);
  bnd->add_option("--tau", bnd_tau);
  bnd->add_option("--K", bin.K);
  bnd->add_option("--phi0", bin.phi0);
  bnd->add_option("--nu", bin.nu);
  auto* sigma_opt = bnd->add_option("--sigma", bin.sigma, "Noise scale; calibrated from epsilon/delta if absent");
  bnd->add_option("--lambda", bin.lambda);
  bnd->add_option("--epsilon", bin.epsilon);
  bnd->add_option("--delta", bin.delta);
  bnd->add_option("--sensitivity", bnd_sens, "exact or paper (for calibrating sigma)");
  bnd->add_option("--out", bnd_out, "Report JSON (default stdout)");

  // ---- approx ----
  auto* apx = app.add_subcommand("approx", "Polynomial approximation of a function on [a, b]");
  std::string apx_fn = "logistic_loss", apx_method = "iterated", apx_out;
  int apx_degree = 4, apx_k = 1;
  double apx_a = -5.0, apx_b = 5.0;
  apx->add_option("--function", apx_fn, "logistic_loss, sigmoid, abs or exp");
  apx->add_option("--method", apx_method, "bernstein, iterated or minimax");
  apx->add_option("--degree", apx_degree);
  apx->add_option("--iterations", apx_k, "Iterated Bernstein rounds");
  apx->add_option("--a", apx_a);
  apx->add_option("--b", apx_b);
  apx->add_option("--out", apx_out, "Result JSON (default stdout)");

  // ---- pipeline ----
  auto* pip = app.add_subcommand("pipeline", "Train-on-synthetic, test-on-real experiment over an epsilon grid");
  std::string pip_config;
  pip->add_option("--config", pip_config, "Experiment JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) {
      const Dataset ds = preprocess(load_raw_csv(pre_raw), load_rules(pre_rules));
      save_csv(pre_out, ds);
      save_schema(pre_schema_out, ds.schema());
      std::cerr << "coded " << ds.size() << " rows\n";
      return 0;
    }
    if (*syn) {
      const Dataset real = syn_data.load();
      MechanismConfig cfg;
      cfg.d = syn_d;
      cfg.privacy = syn_priv;
      cfg.sensitivity = sensitivity_mode_from_string(syn_sens);
      cfg.synth.mode = generator_mode_from_string(syn_mode);
      cfg.synth.brute = syn_brute;
      cfg.synth.fit = syn_fit;
      cfg.seed = syn_seed;
      cfg.sigma_override = syn_sigma;
      MechanismOutput out = generate_private_synthetic(real, cfg);
      save_csv(syn_out, out.synthetic);
      if (!syn_marginals.empty()) save_marginal_set(syn_marginals, out.measurements.marginals);
      if (syn_diag) out.report.non_private_vs_real = real_marginal_gap(real, out.synthetic, out.measurements.marginals);
      emit(provenance_json(out.report), syn_report);
      return 0;
    }
    if (*trn) {
      const Dataset ds = trn_data.load();
      const TrainResult r = train_projected(ds, make_loss(trn_loss, trn_gamma), parse_tau(trn_tau), trn_cfg);
      save_model(trn_out, r.model, ds.schema().fingerprint());
      std::cerr << "objective " << r.objective << " after " << r.iterations << " steps\n";
      return 0;
    }
    if (*dps) {
      const Dataset ds = dps_data.load();
      const SgdResult r = dp_sgd(encode(ds), make_loss(dps_loss, dps_gamma), dps_cfg, dps_seed);
      save_model(dps_out, r.model, ds.schema().fingerprint());
      std::cerr << "sigma " << r.sigma << '\n';
      return 0;
    }
    if (*evl) {
      const Dataset ds = evl_data.load();
      const EncodedData enc = encode(ds);
      const auto fp = ds.schema().fingerprint();
      const LinearModel model = load_model(evl_model, fp);
      json j;
      j["rows"] = enc.rows;
      j["accuracy"] = accuracy(model, enc);
      try {
        j["roc_auc"] = roc_auc(model, enc);
      } catch (const InvalidArgument&) {
        j["roc_auc"] = nullptr;
      }
      j["empirical_risk"] = empirical_risk(model, enc);
      if (!evl_reference.empty()) {
        const LinearModel ref = load_model(evl_reference, fp);
        j["reference_risk"] = empirical_risk(ref, enc);
        j["excess_empirical_risk"] = j["empirical_risk"].get<double>() - j["reference_risk"].get<double>();
      }
      emit(j.dump(2), evl_out);
      return 0;
    }
    if (*bnd) {
      if (!bnd_params.empty()) {
        const json p = json::parse(read_text_file(bnd_params));
        bnd_kind = p.value("kind", bnd_kind);
        bnd_mode = p.value("mode", bnd_mode);
        bnd_sens = p.value("sensitivity", bnd_sens);
        bin.n = p.value("n", bin.n);
        bin.m = p.value("m", bin.m);
        bin.d = p.value("d", bin.d);
        bin.l = p.value("l", bin.l);
        if (p.contains("tau")) bnd_tau = p.at("tau").is_string() ? p.at("tau").get<std::string>() : p.at("tau").dump();
        bin.K = p.value("K", bin.K);
        bin.phi0 = p.value("phi0", bin.phi0);
        bin.nu = p.value("nu", bin.nu);
        if (p.contains("sigma")) {
          bin.sigma = p.at("sigma").get<double>();
          bnd_sigma_set = true;
        }
        bin.lambda = p.value("lambda", bin.lambda);
        bin.epsilon = p.value("epsilon", bin.epsilon);
        bin.delta = p.value("delta", bin.delta);
      }
      bnd_sigma_set = bnd_sigma_set || sigma_opt->count() > 0;
      bin.tau = parse_tau(bnd_tau);
      const ConstantsMode mode = constants_mode_from_string(bnd_mode);
      std::string text;
      if (bnd_kind == "lower") {
        text = lower_bound_json(lower_bound_schedule(bin.m));
      } else if (bnd_kind == "generic") {
        text = bound_report_json(generic_excess_risk_bound(bin, mode));
      } else if (bnd_kind == "logistic") {
        text = bound_report_json(logistic_excess_risk_bound(bin, mode));
      } else if (bnd_kind == "private-generic" || bnd_kind == "private-logistic") {
        if (!bnd_sigma_set) {
          const PrivacyParams pp{bin.epsilon, bin.delta, bin.lambda, true};
          bin.sigma = calibrate(bin.m, bin.d, pp, sensitivity_mode_from_string(bnd_sens)).sigma;
        }
        const BoundLoss loss = bnd_kind == "private-generic" ? BoundLoss::generic : BoundLoss::logistic;
        text = bound_report_json(private_excess_risk_bound(bin, loss, mode));
      } else {
        throw InvalidArgument("unknown bound kind '" + bnd_kind + "'");
      }
      emit(text, bnd_out);
      return 0;
    }
    if (*apx) {
      const RealFunction f = named_function(apx_fn);
      const Interval iv(apx_a, apx_b);
      json j;
      j["function"] = apx_fn;
      j["method"] = apx_method;
      j["interval"] = {apx_a, apx_b};
      j["degree"] = apx_degree;
      std::optional<Polynomial> p;
      if (apx_method == "bernstein") {
        p = bernstein(f, apx_degree, iv);
      } else if (apx_method == "iterated") {
        p = iterated_bernstein(f, apx_degree, apx_k, iv);
        j["iterations"] = apx_k;
      } else if (apx_method == "minimax") {
        const MinimaxResult r = remez_minimax(f, apx_degree, iv);
        p = r.poly;
        j["levelled_error"] = r.levelled_error;
        j["exchanges"] = r.exchanges;
        j["converged"] = r.converged;
      } else {
        throw InvalidArgument("unknown method '" + apx_method + "'");
      }
      const ApproxReport rep = approx_report(*p, f);
      j["coefficients"] = p->coeffs();
      j["max_abs_error"] = rep.max_abs_error;
      j["argmax"] = rep.argmax;
      j["coeff_abs_sum"] = rep.coeff_abs_sum;
      emit(j.dump(2), apx_out);
      return 0;
    }
    if (*pip) {
      const ExperimentSpec spec = load_experiment(pip_config);
      const Dataset real = load_csv(spec.data, load_schema(spec.schema));
      ExperimentConfig cfg = spec.config;
      if (cfg.output_dir.empty()) cfg.output_dir = fs::path(pip_config).parent_path() / "results";
      const ExperimentResult r = run_experiment(real, cfg);
      std::size_t ok = 0;
      for (const auto& row : r.runs) ok += row.ok ? 1 : 0;
      std::cerr << ok << " of " << r.runs.size() << " runs completed; results in " << cfg.output_dir << '\n';
      return r.all_completed ? 0 : kExitIncomplete;
    }
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
