// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "neurokalman/params.hpp"

namespace nk {

struct AdamState {
    ParamSet m;  // first moment
    ParamSet v;  // second moment
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const ParamSet& params) {
        AdamState s;
        s.m = params.zeros_like();
        s.v = params.zeros_like();
        return s;
    }
};

/// One bias-corrected Adam update. Gradients must align with the parameter
/// layout. A non-finite gradient aborts with a diagnostic naming the block.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr);

}  // namespace nk
