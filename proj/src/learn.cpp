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

#include "margsyn/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"
#include "margsyn/rng.hpp"

namespace margsyn {

namespace {

constexpr double kPhiGammaSlack = 1e-9;

double phi_gamma_arg(double t) {
  if (!(std::abs(t) <= 1.0 + kPhiGammaSlack))
    throw DomainError("phi_gamma loss is defined on [-1, 1]; got margin " + std::to_string(t));
  return std::clamp(t, -1.0, 1.0);
}

std::size_t segment_of(const std::vector<std::pair<double, double>>& knots, double t) {
  if (t < knots.front().first) return 0;
  const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double v, const std::pair<double, double>& k) { return v < k.first; });
  const auto k = static_cast<std::size_t>(it - knots.begin());
  return std::min(k == 0 ? 0 : k - 1, knots.size() - 2);
}

double slope_of(const std::vector<std::pair<double, double>>& knots, std::size_t k) {
  return (knots[k + 1].second - knots[k].second) / (knots[k + 1].first - knots[k].first);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_dims(std::span<const double> w, const EncodedData& data) {
  if (w.size() != data.features)
    throw InvalidArgument("weight vector has " + std::to_string(w.size()) + " entries, data has " +
                          std::to_string(data.features) + " features");
}

nlohmann::json loss_json(const LossSpec& s) {
  nlohmann::json j;
  j["kind"] = loss_to_string(s.kind);
  if (s.kind == LossKind::phi_gamma) j["gamma"] = s.gamma;
  if (s.kind == LossKind::piecewise_linear) {
    j["knots"] = nlohmann::json::array();
    for (const auto& [t, v] : s.knots) j["knots"].push_back({t, v});
  }
  j["lipschitz_K"] = s.lipschitz_K;
  j["value_at_zero"] = s.value_at_zero;
  return j;
}

LossSpec loss_from(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "logistic") return LossSpec::logistic();
  if (kind == "phi_gamma") return LossSpec::phi_gamma(j.at("gamma").get<double>());
  if (kind == "piecewise_linear") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : j.at("knots")) knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    return LossSpec::piecewise_linear(std::move(knots));
  }
  throw ParseError("unknown loss kind '" + kind + "'");
}

}  // namespace

// ---- losses ----------------------------------------------------------------

LossSpec LossSpec::logistic() {
  LossSpec s;
  s.kind = LossKind::logistic;
  s.lipschitz_K = 1.0;
  s.value_at_zero = std::log(2.0);
  return s;
}

LossSpec LossSpec::phi_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("phi_gamma needs gamma in (0, 1)");
  LossSpec s;
  s.kind = LossKind::phi_gamma;
  s.gamma = gamma;
  // sup |d/dt gamma*phi_gamma| on [-1,1] is reached at t = -1.
  s.lipschitz_K = 2.0 + gamma / 2.0;
  s.value_at_zero = gamma * (1.0 / 8.0 + 1.0);
  return s;
}

LossSpec LossSpec::piecewise_linear(std::vector<std::pair<double, double>> knots) {
  LossSpec s;
  s.kind = LossKind::piecewise_linear;
  s.knots = std::move(knots);
  s.validate();
  double k = 0.0;
  for (std::size_t i = 0; i + 1 < s.knots.size(); ++i) k = std::max(k, std::abs(slope_of(s.knots, i)));
  s.lipschitz_K = k;
  s.value_at_zero = loss_value(s, 0.0);
  return s;
}

void LossSpec::validate() const {
  switch (kind) {
    case LossKind::logistic:
      return;
    case LossKind::phi_gamma:
      if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("phi_gamma needs gamma in (0, 1)");
      return;
    case LossKind::piecewise_linear:
      if (knots.size() < 2) throw InvalidArgument("piecewise-linear loss needs at least two knots");
      for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
          throw NumericalError("piecewise-linear loss table has a non-finite entry");
        if (i > 0 && !(knots[i].first > knots[i - 1].first))
          throw InvalidArgument("piecewise-linear knots must be strictly increasing in t");
      }
      return;
  }
}

std::string LossSpec::describe() const {
  std::ostringstream os;
  os << loss_to_string(kind);
  if (kind == LossKind::phi_gamma) os << "(gamma=" << gamma << ")";
  if (kind == LossKind::piecewise_linear) os << "(" << knots.size() << " knots)";
  return os.str();
}

std::string loss_to_string(LossKind kind) {
  switch (kind) {
    case LossKind::logistic:
      return "logistic";
    case LossKind::phi_gamma:
      return "phi_gamma";
    case LossKind::piecewise_linear:
      return "piecewise_linear";
  }
  return "unknown";
}

double loss_value(const LossSpec& spec, double t) {
  switch (spec.kind) {
    case LossKind::logistic:
      return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    case LossKind::phi_gamma: {
      const double g = spec.gamma;
      t = phi_gamma_arg(t);
      double piece = 0.0;
      if (t <= 0.0)
        piece = 1.0 - 2.0 * t / g;
      else if (t <= g)
        piece = (t - g) * (t - g) / (g * g);
      return g * ((1.0 - t) * (1.0 - t) / 8.0 + piece);
    }
    case LossKind::piecewise_linear: {
      const std::size_t k = segment_of(spec.knots, t);
      return spec.knots[k].second + slope_of(spec.knots, k) * (t - spec.knots[k].first);
    }
  }
  return 0.0;
}

double loss_derivative(const LossSpec& spec, double t) {
  switch (spec.kind) {
    case LossKind::logistic:
      if (t >= 0.0) {
        const double e = std::exp(-t);
        return -e / (1.0 + e);
      }
      return -1.0 / (1.0 + std::exp(t));
    case LossKind::phi_gamma: {
      const double g = spec.gamma;
      t = phi_gamma_arg(t);
      double piece = 0.0;
      if (t < 0.0)
        piece = -2.0 / g;
      else if (t < g)
        piece = 2.0 * (t - g) / (g * g);
      return g * (-(1.0 - t) / 4.0 + piece);
    }
    case LossKind::piecewise_linear:
      return slope_of(spec.knots, segment_of(spec.knots, t));
  }
  return 0.0;
}

// ---- models ----------------------------------------------------------------

Prediction predict(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.w.size())
    throw InvalidArgument("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                          std::to_string(model.w.size()));
  Prediction p;
  p.score = dot(model.w, x);
  p.label = p.score >= 0.0 ? 1 : -1;
  return p;
}

double empirical_risk(const LossSpec& spec, std::span<const double> w, const EncodedData& data) {
  if (data.rows == 0) throw InvalidArgument("empirical risk of an empty dataset");
  check_dims(w, data);
  double s = 0.0;
  for (std::size_t i = 0; i < data.rows; ++i) s += loss_value(spec, data.y[i] * dot(w, data.features_of(i)));
  return s / static_cast<double>(data.rows);
}

std::vector<double> risk_gradient(const LossSpec& spec, std::span<const double> w, const EncodedData& data) {
  if (data.rows == 0) throw InvalidArgument("risk gradient of an empty dataset");
  check_dims(w, data);
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t i = 0; i < data.rows; ++i) {
    const auto x = data.features_of(i);
    const double c = loss_derivative(spec, data.y[i] * dot(w, x)) * data.y[i];
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += c * x[k];
  }
  for (double& v : g) v /= static_cast<double>(data.rows);
  return g;
}

double empirical_risk(const LinearModel& model, const EncodedData& data) {
  return empirical_risk(model.loss, model.w, data);
}

void project_to_ball(std::vector<double>& w, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("norm budget must be non-negative");
  if (std::isinf(tau)) return;
  const double nrm = norm2(w);
  if (nrm > tau) {
    const double f = tau / nrm;
    for (double& v : w) v *= f;
  }
}

// ---- projected training ----------------------------------------------------

void TrainConfig::validate() const {
  if (max_iters == 0 || !(step_size > 0.0) || !(decay > 0.0 && decay <= 1.0) || !(tolerance >= 0.0))
    throw InvalidArgument("train config needs max_iters > 0, step_size > 0, decay in (0,1], tolerance >= 0");
}

TrainResult train_projected(const EncodedData& data, const LossSpec& spec, double tau, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (data.rows == 0) throw InvalidArgument("training needs at least one row");
  if (!(tau >= 0.0)) throw InvalidArgument("norm budget must be non-negative");

  TrainResult res;
  res.model.tau = tau;
  res.model.loss = spec;
  std::vector<double>& w = res.model.w;
  w.assign(data.features, 0.0);
  double f = empirical_risk(spec, w, data);
  if (!std::isfinite(f)) throw NumericalError("loss is not finite at w = 0");
  res.history.push_back(f);
  if (tau == 0.0 || data.features == 0) {
    res.objective = f;
    return res;
  }

  double ceiling = cfg.step_size;
  double step = cfg.step_size;
  std::vector<double> trial(w.size());
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const auto g = risk_gradient(spec, w, data);
    double s = std::min(2.0 * step, ceiling);
    bool accepted = false;
    double f_new = f;
    while (s > 1e-16) {
      for (std::size_t k = 0; k < w.size(); ++k) trial[k] = w[k] - s * g[k];
      project_to_ball(trial, tau);
      f_new = empirical_risk(spec, trial, data);
      double lin = 0.0, sq = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double dw = trial[k] - w[k];
        lin += g[k] * dw;
        sq += dw * dw;
      }
      if (std::isfinite(f_new) && f_new <= f && f_new <= f + lin + sq / (2.0 * s)) {
        accepted = sq > 0.0;
        break;
      }
      s /= 2.0;
    }
    if (!accepted) break;
    step = s;
    ceiling *= cfg.decay;
    const double gain = f - f_new;
    w.swap(trial);
    f = f_new;
    res.history.push_back(f);
    res.iterations = it + 1;
    if (gain <= cfg.tolerance * (1.0 + std::abs(f))) break;
  }
  res.objective = f;
  return res;
}

TrainResult train_projected(const Dataset& ds, const LossSpec& spec, double tau, const TrainConfig& cfg) {
  return train_projected(encode(ds), spec, tau, cfg);
}

// ---- DP-SGD ----------------------------------------------------------------

void DpSgdConfig::validate(std::size_t n) const {
  if (T == 0 || B == 0) throw InvalidArgument("DP-SGD needs T >= 1 and B >= 1");
  if (B > n) throw InvalidArgument("DP-SGD batch size B=" + std::to_string(B) + " exceeds n=" + std::to_string(n));
  if (!(eta > 0.0) || !(C > 0.0) || !(L > 0.0) || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw InvalidArgument("DP-SGD needs eta, C, L, epsilon > 0 and delta in (0, 1)");
}

double dp_sgd_sigma(double L, std::size_t T, std::size_t n, double epsilon, double delta) {
  if (!(L > 0.0) || T == 0 || n == 0 || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw InvalidArgument("DP-SGD noise needs L, T, n, epsilon > 0 and delta in (0, 1)");
  const double nd = static_cast<double>(n);
  const double var = 16.0 * L * L * static_cast<double>(T) * std::log(1.0 / delta) / (nd * nd * epsilon * epsilon);
  return std::sqrt(var);
}

void clip_gradient(std::span<double> g, double C) {
  const double f = std::max(1.0, norm2(g) / C);
  if (f > 1.0)
    for (double& v : g) v /= f;
}

namespace {

SgdResult run_sgd(const EncodedData& data, const LossSpec& spec, std::size_t T, std::size_t B, double eta,
                  std::uint64_t seed, bool record, const double* clip, double sigma, bool add_noise) {
  SgdResult res;
  res.model.loss = spec;
  res.model.tau = kUnbounded;
  res.sigma = sigma;
  std::vector<double>& w = res.model.w;
  w.assign(data.features, 0.0);
  Rng batch(derive_seed(seed, {0xba7c4}));
  Rng noise(derive_seed(seed, {0x4015e}));
  std::vector<double> acc(w.size()), g(w.size());
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t i = batch.index(data.rows);
      const auto x = data.features_of(i);
      const double c = loss_derivative(spec, data.y[i] * dot(w, x)) * data.y[i];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = c * x[k];
      if (clip) clip_gradient(g, *clip);
      for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    }
    for (double& v : acc) v /= static_cast<double>(B);
    if (add_noise)
      for (double& v : acc) v += noise.gaussian(sigma);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= eta * acc[k];
    if (record) res.trajectory.push_back(w);
  }
  return res;
}

}  // namespace

SgdResult dp_sgd(const EncodedData& data, const LossSpec& spec, const DpSgdConfig& cfg, std::uint64_t seed) {
  spec.validate();
  cfg.validate(data.rows);
  const double sigma = dp_sgd_sigma(cfg.L, cfg.T, data.rows, cfg.epsilon, cfg.delta);
  return run_sgd(data, spec, cfg.T, cfg.B, cfg.eta, seed, cfg.record_trajectory, &cfg.C, sigma, !cfg.zero_noise);
}

SgdResult plain_sgd(const EncodedData& data, const LossSpec& spec, std::size_t T, std::size_t B, double eta,
                    std::uint64_t seed, bool record_trajectory) {
  spec.validate();
  if (T == 0 || B == 0 || B > data.rows || !(eta > 0.0))
    throw InvalidArgument("SGD needs T >= 1, 1 <= B <= n and eta > 0");
  return run_sgd(data, spec, T, B, eta, seed, record_trajectory, nullptr, 0.0, false);
}

// ---- model files -----------------------------------------------------------

std::string loss_to_json_text(const LossSpec& spec) { return loss_json(spec).dump(); }

LossSpec loss_from_json_text(std::string_view text) {
  try {
    return loss_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad loss description: ") + e.what());
  }
}

std::string model_json(const LinearModel& model, std::uint64_t schema_fingerprint) {
  nlohmann::json j;
  j["format"] = "margsyn-linear-model";
  j["version"] = 1;
  j["schema_fingerprint"] = schema_fingerprint;
  if (std::isinf(model.tau))
    j["tau"] = "inf";
  else
    j["tau"] = model.tau;
  j["loss"] = loss_json(model.loss);
  j["w"] = model.w;
  return j.dump(2);
}

LinearModel parse_model_json(std::string_view text, std::uint64_t expected_fingerprint) {
  LinearModel m;
  std::uint64_t fp = 0;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "margsyn-linear-model") throw ParseError("not a model file");
    fp = j.at("schema_fingerprint").get<std::uint64_t>();
    const auto& tau = j.at("tau");
    m.tau = tau.is_string() && tau.get<std::string>() == "inf" ? kUnbounded : tau.get<double>();
    m.loss = loss_from(j.at("loss"));
    m.w = j.at("w").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model file: ") + e.what());
  }
  if (fp != expected_fingerprint) throw InvalidArgument("model was trained on a different schema");
  return m;
}

void save_model(const std::filesystem::path& path, const LinearModel& model, std::uint64_t schema_fingerprint) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_json(model, schema_fingerprint) << '\n';
}

LinearModel load_model(const std::filesystem::path& path, std::uint64_t expected_fingerprint) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str(), expected_fingerprint);
}

}  // namespace margsyn
