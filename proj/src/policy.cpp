// SPDX-License-Identifier: Apache-2.0

#include "vadr/policy.hpp"

#include <cmath>
#include <limits>
#include <typeinfo>

#include "vadr/error.hpp"

namespace vadr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool allowed(const Factor& f, std::size_t o) { return f.allowed.empty() || f.allowed[o] != 0; }

void check_token(const Factor& f, int tok, std::size_t pos) {
  if (tok < 0 || static_cast<std::size_t>(tok) >= f.options.size() || !allowed(f, static_cast<std::size_t>(tok))) {
    throw PreconditionError("token " + std::to_string(tok) + " at position " + std::to_string(pos) +
                            " is outside the vocabulary");
  }
}

// grad += scale * sum_o coef[o] * phi(o)
void scatter(const Factor& f, const std::vector<double>& coef, double scale, std::vector<double>& grad) {
  for (std::size_t o = 0; o < f.options.size(); ++o) {
    if (coef[o] == 0.0) continue;
    for (const auto& [idx, v] : f.options[o]) grad[idx] += scale * coef[o] * v;
  }
}

}  // namespace

void Policy::backprop_step_kl(const PolicyInput&, std::span<const int>, const Policy&, std::span<const double>,
                              std::vector<double>&) const {
  throw PreconditionError("policy has no exact KL");
}

std::vector<double> LogLinearPolicy::log_softmax(const Factor& f) const {
  const std::size_t n = f.options.size();
  std::vector<double> z(n, kNegInf);
  double mx = kNegInf;
  for (std::size_t o = 0; o < n; ++o) {
    if (!allowed(f, o)) continue;
    double s = 0.0;
    for (const auto& [idx, v] : f.options[o]) s += theta_[idx] * v;
    z[o] = s;
    mx = std::max(mx, s);
  }
  double sum = 0.0;
  for (double v : z) {
    if (v != kNegInf) sum += std::exp(v - mx);
  }
  const double lse = mx + std::log(sum);
  for (double& v : z) {
    if (v != kNegInf) v -= lse;
  }
  return z;
}

Emission LogLinearPolicy::sample(const PolicyInput& in, Rng& rng, bool greedy) const {
  Emission e;
  while (auto f = next_factor(in, e.tokens)) {
    const auto lp = log_softmax(*f);
    std::size_t pick = 0;
    if (greedy) {
      for (std::size_t o = 1; o < lp.size(); ++o) {
        if (lp[o] > lp[pick]) pick = o;
      }
    } else {
      const double u = uniform01(rng);
      double acc = 0.0;
      std::size_t last = 0;
      pick = lp.size();
      for (std::size_t o = 0; o < lp.size(); ++o) {
        if (lp[o] == kNegInf) continue;
        last = o;
        acc += std::exp(lp[o]);
        if (u < acc) {
          pick = o;
          break;
        }
      }
      if (pick == lp.size()) pick = last;  // rounding slack at the top end
    }
    e.tokens.push_back(static_cast<int>(pick));
    e.logps.push_back(lp[pick]);
  }
  return e;
}

std::vector<double> LogLinearPolicy::log_prob(const PolicyInput& in, std::span<const int> tokens) const {
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t t = 0;; ++t) {
    auto f = next_factor(in, tokens.first(t));
    if (!f) {
      if (t != tokens.size()) throw PreconditionError("token sequence longer than the policy emits");
      break;
    }
    if (t == tokens.size()) throw PreconditionError("token sequence ends early");
    check_token(*f, tokens[t], t);
    out.push_back(log_softmax(*f)[static_cast<std::size_t>(tokens[t])]);
  }
  return out;
}

void LogLinearPolicy::backprop_log_prob(const PolicyInput& in, std::span<const int> tokens,
                                        std::span<const double> weights, std::vector<double>& grad) const {
  if (weights.size() != tokens.size()) throw PreconditionError("weights and tokens differ in length");
  if (grad.size() != theta_.size()) grad.assign(theta_.size(), 0.0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto f = next_factor(in, tokens.first(t));
    if (!f) throw PreconditionError("token sequence longer than the policy emits");
    check_token(*f, tokens[t], t);
    if (weights[t] == 0.0) continue;
    const auto lp = log_softmax(*f);
    // d log p(k) / d z_o = [o == k] - p_o
    std::vector<double> coef(lp.size());
    for (std::size_t o = 0; o < lp.size(); ++o) coef[o] = lp[o] == kNegInf ? 0.0 : -std::exp(lp[o]);
    coef[static_cast<std::size_t>(tokens[t])] += 1.0;
    scatter(*f, coef, weights[t], grad);
  }
}

const LogLinearPolicy& LogLinearPolicy::comparable(const Policy& ref) const {
  const auto* r = dynamic_cast<const LogLinearPolicy*>(&ref);
  if (r == nullptr || typeid(*r) != typeid(*this) || r->theta_.size() != theta_.size()) {
    throw PreconditionError("reference policy is not comparable");
  }
  return *r;
}

std::optional<std::vector<double>> LogLinearPolicy::step_kl(const PolicyInput& in, std::span<const int> tokens,
                                                            const Policy& ref) const {
  const auto* r = dynamic_cast<const LogLinearPolicy*>(&ref);
  if (r == nullptr || typeid(*r) != typeid(*this) || r->theta_.size() != theta_.size()) return std::nullopt;
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto f = next_factor(in, tokens.first(t));
    if (!f) throw PreconditionError("token sequence longer than the policy emits");
    check_token(*f, tokens[t], t);
    const auto p = log_softmax(*f);
    const auto q = r->log_softmax(*f);
    double kl = 0.0;
    for (std::size_t o = 0; o < p.size(); ++o) {
      if (p[o] != kNegInf) kl += std::exp(p[o]) * (p[o] - q[o]);
    }
    out.push_back(std::max(0.0, kl));
  }
  return out;
}

void LogLinearPolicy::backprop_step_kl(const PolicyInput& in, std::span<const int> tokens, const Policy& ref,
                                       std::span<const double> weights, std::vector<double>& grad) const {
  const auto& r = comparable(ref);
  if (weights.size() != tokens.size()) throw PreconditionError("weights and tokens differ in length");
  if (grad.size() != theta_.size()) grad.assign(theta_.size(), 0.0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto f = next_factor(in, tokens.first(t));
    if (!f) throw PreconditionError("token sequence longer than the policy emits");
    check_token(*f, tokens[t], t);
    if (weights[t] == 0.0) continue;
    const auto p = log_softmax(*f);
    const auto q = r.log_softmax(*f);
    double kl = 0.0;
    for (std::size_t o = 0; o < p.size(); ++o) {
      if (p[o] != kNegInf) kl += std::exp(p[o]) * (p[o] - q[o]);
    }
    // d KL / d z_o = p_o (log p_o - log q_o - KL)
    std::vector<double> coef(p.size(), 0.0);
    for (std::size_t o = 0; o < p.size(); ++o) {
      if (p[o] != kNegInf) coef[o] = std::exp(p[o]) * (p[o] - q[o] - kl);
    }
    scatter(*f, coef, weights[t], grad);
  }
}

TabularSequencePolicy::TabularSequencePolicy(int length, int symbols, std::vector<double> theta)
    : LogLinearPolicy(std::move(theta)), length_(length), symbols_(symbols) {
  if (length < 1 || symbols < 2) throw PreconditionError("tabular policy needs length >= 1 and >= 2 symbols");
  if (theta_.empty()) theta_.assign(parameter_count(length, symbols), 0.0);
  if (theta_.size() != parameter_count(length, symbols)) {
    throw PreconditionError("tabular policy parameter count mismatch");
  }
}

std::size_t TabularSequencePolicy::parameter_count(int length, int symbols) {
  const auto v = static_cast<std::size_t>(symbols);
  return v + static_cast<std::size_t>(length - 1) * v * v;
}

PolicyPtr TabularSequencePolicy::with_parameters(std::vector<double> theta) const {
  return std::make_shared<TabularSequencePolicy>(length_, symbols_, std::move(theta));
}

std::optional<Factor> TabularSequencePolicy::next_factor(const PolicyInput&, std::span<const int> prefix) const {
  const auto t = prefix.size();
  if (t >= static_cast<std::size_t>(length_)) return std::nullopt;
  const auto v = static_cast<std::size_t>(symbols_);
  std::size_t base = 0;
  if (t > 0) base = v + (t - 1) * v * v + static_cast<std::size_t>(prefix[t - 1]) * v;
  Factor f;
  f.options.resize(v);
  for (std::size_t o = 0; o < v; ++o) f.options[o] = {{base + o, 1.0}};
  return f;
}

std::string TabularSequencePolicy::decode(const PolicyInput&, std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) {
    if (!out.empty()) out += ' ';
    out += 's' + std::to_string(t);
  }
  return out;
}

}  // namespace vadr
