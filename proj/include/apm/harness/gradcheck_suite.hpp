#pragma once

#include <cstdint>
#include <vector>

#include "apm/core/gradcheck.hpp"
#include "apm/model/model_config.hpp"

namespace apm {

/// F=9, J=4, C=8, K=2, N=2, L=2 with every APM component enabled.
ModelConfig micro_model_config();

/// Finite-difference checks in 64-bit mode: every differentiable op, each
/// model module, the losses, and the full model loss on a two-sample
/// micro-batch. Residual scales β and γ are set away from zero so every
/// path carries gradient.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace apm
