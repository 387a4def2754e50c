// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace nk::verify {

struct SuiteResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // worst observed deviation / error for the suite
    std::string detail;
};

/// Eq-equivalence of softmax attention and the Nadaraya-Watson oracle over
/// 1000 random instances (N <= 64, d <= 32), plus the empty-memory fallback.
/// `scale_mutation` multiplies the attention scale; anything but 1.0 is a
/// deliberate fault the suite must catch.
SuiteResult kde_attention_suite(double scale_mutation = 1.0);

/// Convex-combination vs residual fusion forms over 1e4 random triples.
SuiteResult fusion_identity_suite();

/// Finite-difference checks for every trainable block and the composed
/// episode loss (reduced dimensions; tolerance 1e-4).
SuiteResult grad_check_suite();

/// Two-step conjugate-Gaussian closed form, argmin fusion vs the Kalman
/// update on diagonal systems, and the PSD posterior ordering.
SuiteResult kalman_oracle_suite();

/// SR <= OSR, SPL <= SR, and the 20 m success boundary.
SuiteResult metric_invariant_suite();

/// Threshold strictness, capacity bound, and key/value identity over random
/// insertion sequences.
SuiteResult memory_policy_suite();

/// Scalar contraction recursion against its closed-form fixed point.
SuiteResult contraction_suite();

std::vector<SuiteResult> run_all();

}  // namespace nk::verify
