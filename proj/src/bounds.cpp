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

#include "margsyn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "margsyn/error.hpp"
#include "margsyn/privacy.hpp"

namespace margsyn {

namespace {

void check(const BoundInputs& in) {
  if (in.d < 2) throw InvalidArgument("excess-risk bounds need d >= 2");
  if (in.n == 0 || in.m == 0) throw InvalidArgument("excess-risk bounds need n >= 1 and m >= 1");
  if (!(in.tau >= 0.0) || !(in.K >= 0.0) || !(in.phi0 >= 0.0) || !(in.nu >= 0.0))
    throw InvalidArgument("excess-risk bounds need tau, K, phi(0), nu >= 0");
  if (std::isinf(in.tau)) throw InvalidArgument("excess-risk bounds need a finite tau");
}

// Fills the marginal-side fields common to both losses.
void marginal_part(const BoundInputs& in, BoundReport& r) {
  const double dm1 = static_cast<double>(in.d - 1);
  const double m = static_cast<double>(in.m);
  r.base = 3.0 * m * std::max(1.0, in.tau);
  r.tight_base_factor = 1.0 + 2.0 / (2.0 * r.half_width);
  r.per_hop_marginal = r.loss_sup * std::pow(r.base, dm1) * in.nu / static_cast<double>(in.n);
  r.marginal_term = r.marginal_hops * r.per_hop_marginal;
  r.notes.push_back(
      "marginal base uses 3m*max(1,tau) for every loss");
}

BoundReport zero_budget(const BoundInputs& in, ConstantsMode mode, const char* loss) {
  BoundReport r;
  r.mode = mode;
  r.loss = loss;
  r.nu = in.nu;
  r.notes.push_back("tau = 0 forces w = 0 on both datasets, so the excess risk is 0");
  return r;
}

}  // namespace

std::string_view to_string(ConstantsMode mode) {
  return mode == ConstantsMode::explicit_constants ? "explicit" : "asymptotic";
}

ConstantsMode constants_mode_from_string(std::string_view s) {
  if (s == "explicit") return ConstantsMode::explicit_constants;
  if (s == "asymptotic") return ConstantsMode::asymptotic_shape;
  throw InvalidArgument("unknown constants mode '" + std::string(s) + "' (expected explicit or asymptotic)");
}

BoundReport generic_excess_risk_bound(const BoundInputs& in, ConstantsMode mode) {
  check(in);
  if (in.tau == 0.0) return zero_budget(in, mode, "generic");
  const double m = static_cast<double>(in.m);
  const double dm1 = static_cast<double>(in.d - 1);
  const double reach = in.tau * std::sqrt(m);
  BoundReport r;
  r.mode = mode;
  r.loss = "generic";
  r.nu = in.nu;
  if (mode == ConstantsMode::asymptotic_shape) {
    r.approx_term = in.K * in.tau * std::sqrt(m / dm1);
    r.marginal_term = (in.K * reach + in.phi0) * std::pow(3.0 * m * std::max(1.0, in.tau), dm1) * in.nu /
                      static_cast<double>(in.n);
    r.approx_hops = r.marginal_hops = 1.0;
    r.total = r.approx_term + r.marginal_term;
    r.notes.push_back("asymptotic shape: multipliers omitted, not a valid bound");
    return r;
  }
  r.half_width = std::max(reach, 1.0);
  const double width = 2.0 * r.half_width;
  // Bernstein certificate with modulus of continuity K*width*delta.
  r.per_hop_approx = 1.25 * in.K * width / std::sqrt(dm1);
  r.approx_term = r.approx_hops * r.per_hop_approx;
  r.loss_sup = in.K * r.half_width + in.phi0;
  marginal_part(in, r);
  r.total = r.approx_term + r.marginal_term;
  return r;
}

BoundReport logistic_excess_risk_bound(const BoundInputs& in, ConstantsMode mode) {
  check(in);
  if (in.tau == 0.0) return zero_budget(in, mode, "logistic");
  const double m = static_cast<double>(in.m);
  const double dm1 = static_cast<double>(in.d - 1);
  const double reach = in.tau * std::sqrt(m);
  BoundReport r;
  r.mode = mode;
  r.loss = "logistic";
  r.nu = in.nu;
  if (mode == ConstantsMode::asymptotic_shape) {
    r.approx_term = reach / dm1;
    r.marginal_term = reach * std::pow(3.0 * m * std::max(1.0, in.tau), dm1) * in.nu / static_cast<double>(in.n);
    r.approx_hops = r.marginal_hops = 1.0;
    r.total = r.approx_term + r.marginal_term;
    r.notes.push_back("asymptotic shape: multipliers omitted, not a valid bound");
    return r;
  }
  r.half_width = std::max(reach, 1.0);
  const double width = 2.0 * r.half_width;
  // Derivative certificate (3/(4 sqrt k)) * omega(f', 1/sqrt k) with k = d-1;
  // on [0,1] the rescaled derivative has modulus width^2 * delta / 4.
  r.per_hop_approx = 3.0 * width * width / (16.0 * dm1);
  r.approx_term = r.approx_hops * r.per_hop_approx;
  r.loss_sup = std::numbers::ln2 + r.half_width;
  marginal_part(in, r);
  r.total = r.approx_term + r.marginal_term;
  return r;
}

BoundReport private_excess_risk_bound(const BoundInputs& in, BoundLoss loss, ConstantsMode mode) {
  if (!(in.sigma >= 0.0) || !(in.lambda >= 0.0) || in.l < 1)
    throw InvalidArgument("private bound needs sigma >= 0, lambda >= 0 and l >= 1");
  BoundInputs with_nu = in;
  with_nu.nu = l1_deviation_bound(in.sigma, in.d, in.m, in.l, in.lambda);
  BoundReport r = loss == BoundLoss::generic ? generic_excess_risk_bound(with_nu, mode)
                                             : logistic_excess_risk_bound(with_nu, mode);
  r.notes.push_back("nu from the Gaussian l1 deviation bound; holds with probability >= 1 - 2^-lambda");
  return r;
}

LowerBoundParams lower_bound_schedule(std::size_t m) {
  const double md = static_cast<double>(m);
  if (!(md > 2.0 * std::numbers::e)) throw InvalidArgument("lower-bound schedule needs m > 2e");
  LowerBoundParams p;
  p.m = md;
  p.gamma = std::pow(md / 2.0, -5.0 / (10.0 - 2.0 * p.r));
  const double g = std::pow(p.gamma, -2.0 * p.r / 5.0);
  p.n = std::exp(g);
  p.tau = 1.0 / std::sqrt(md);
  p.d_per_cprime = g / -std::log(p.gamma);
  p.gamma_limit = std::pow(2.0, -1.0 / (1.0 - p.r));
  p.gamma_in_range = p.gamma > 0.0 && p.gamma < p.gamma_limit;
  return p;
}

std::string bound_report_json(const BoundReport& r) {
  nlohmann::json j;
  j["loss"] = r.loss;
  j["constants_mode"] = std::string(to_string(r.mode));
  j["approx_term"] = r.approx_term;
  j["marginal_term"] = r.marginal_term;
  j["total"] = r.total;
  j["nu"] = r.nu;
  j["multipliers"] = {{"half_width", r.half_width},
                      {"per_hop_approx", r.per_hop_approx},
                      {"approx_hops", r.approx_hops},
                      {"per_hop_marginal", r.per_hop_marginal},
                      {"marginal_hops", r.marginal_hops},
                      {"loss_sup", r.loss_sup},
                      {"base", r.base},
                      {"tight_base_factor", r.tight_base_factor}};
  j["notes"] = r.notes;
  return j.dump(2);
}

std::string lower_bound_json(const LowerBoundParams& p) {
  nlohmann::json j;
  j["r"] = p.r;
  j["m"] = p.m;
  j["gamma"] = p.gamma;
  j["n"] = p.n;
  j["tau"] = p.tau;
  j["d"] = {{"per_c_prime", p.d_per_cprime},
            {"c_prime", "min(1/5, c/8); c depends only on r and is not given numerically"}};
  j["gamma_limit"] = p.gamma_limit;
  j["gamma_in_range"] = p.gamma_in_range;
  return j.dump(2);
}

}  // namespace margsyn
