#pragma once

// Central finite differences of the batch rank loss, for gradient checks.

#include <cmath>
#include <string>
#include <vector>

#include "argrank/kernels.hpp"

namespace argrank::oracle {

struct GroupError {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double analytic_norm = 0.0;
  double absolute_error = 0.0;  // ||analytic - numeric||

  // Relative error is meaningless once the gradient is at the level of FD noise.
  bool ok(double rel_tol, double abs_tol = 1e-8) const {
    return relative_error < rel_tol || absolute_error < abs_tol;
  }
};

inline double batch_loss(std::span<const TrainingPair* const> batch, const ModelParams& params,
                         const EncoderConfig& config, const RankLossOptions& options) {
  double total = 0.0;
  for (const auto* p : batch) {
    const double plus = score(p->plus, params, config);
    const double minus = score(p->minus, params, config);
    const double raw = options.margin - plus + minus;
    total += options.hinge ? std::max(0.0, raw) : raw;
  }
  return total / static_cast<double>(batch.size());
}

inline std::vector<GroupError> gradient_check(std::span<const TrainingPair* const> batch,
                                              const ModelParams& params, const EncoderConfig& config,
                                              const RankLossOptions& options, double eps = 1e-6) {
  ModelParams analytic = ModelParams::zeros_like(params);
  rank_loss_gradient_serial(batch, params, config, options, analytic);

  ModelParams probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  std::vector<GroupError> out;
  for (std::size_t g = 0; g < probe_tensors.size(); ++g) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < probe_tensors[g].size(); ++k) {
      double& w = probe_tensors[g].data[k];
      const double saved = w;
      w = saved + eps;
      const double up = batch_loss(batch, probe, config, options);
      w = saved - eps;
      const double down = batch_loss(batch, probe, config, options);
      w = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = grad_tensors[g].data[k];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    out.push_back({probe_tensors[g].name, denom > 0 ? std::sqrt(diff2) / denom : std::sqrt(diff2),
                   std::sqrt(a2), std::sqrt(diff2)});
  }
  return out;
}

}  // namespace argrank::oracle
