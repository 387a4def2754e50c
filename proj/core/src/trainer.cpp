// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "neurokalman/threads.hpp"

namespace nk::train {

namespace {

using env::RolloutMode;
using env::StepInputs;

Observation obs_from_record(const StepInputs& in) {
    Observation obs;
    obs.position = in.obs_position;
    obs.local_feature = in.feature;
    obs.goal_embed = in.goal;
    return obs;
}

RetrievalResult retrieval_from_record(const StepInputs& in) {
    RetrievalResult res;
    res.evidence = in.evidence;
    // Weights / used_memory are irrelevant here: the evidence carries no
    // parameter dependence, so the recorded vector is the whole story.
    res.used_memory = true;
    return res;
}

struct StepForward {
    Model::StepCache filter;
    Mlp::Cache wp_main, wp_prior, wp_meas;
    Vec head_main, head_prior, head_meas;
};

struct LossAccum {
    double main = 0.0;
    double aux = 0.0;
};

}  // namespace

// only_step >= 0 restricts the reported loss (and its gradients) to that one
// step, with no backprop into earlier steps.
static LossBreakdown episode_loss_range(const Model& model, const ParamSet& params,
                                        const EpisodeRecord& record, double aux_coeff,
                                        int bptt_window, ParamSet* grads, long only_step);

LossBreakdown episode_loss(const Model& model, const ParamSet& params, const EpisodeRecord& record,
                           double aux_coeff, int bptt_window, ParamSet* grads) {
    return episode_loss_range(model, params, record, aux_coeff, bptt_window, grads, -1);
}

static LossBreakdown episode_loss_range(const Model& model, const ParamSet& params,
                                 const EpisodeRecord& record, double aux_coeff, int bptt_window,
                                 ParamSet* grads, long only_step) {
    const size_t steps = record.steps.size();
    require(steps > 0, "episode_loss: empty record");
    require(bptt_window >= 1, "episode_loss: bptt_window must be >= 1");

    std::vector<StepForward> fwd(steps);
    std::vector<FilterState> states(steps);
    LossAccum acc;

    // Forward pass over the recorded constants.
    for (size_t t = 0; t < steps; ++t) {
        const StepInputs& in = record.steps[t];
        const Observation obs = obs_from_record(in);
        const RetrievalResult retrieval = retrieval_from_record(in);

        Model::StepResult res;
        if (t == 0)
            res = model.filter_init(params, obs, retrieval, &fwd[t].filter);
        else
            res = model.filter_update(params, states[t - 1], record.steps[t - 1].executed, obs,
                                      retrieval, &fwd[t].filter);
        states[t] = res.state;

        fwd[t].head_main = model.waypoint_head.forward(params, fwd[t].filter.z_post, fwd[t].wp_main);
        fwd[t].head_prior =
            model.waypoint_head.forward(params, fwd[t].filter.z_tilde, fwd[t].wp_prior);
        fwd[t].head_meas = model.waypoint_head.forward(params, fwd[t].filter.r, fwd[t].wp_meas);

        if (only_step < 0 || static_cast<size_t>(only_step) == t) {
            const Vec expert = in.expert.as_vec();
            acc.main += l1_loss(fwd[t].head_main, expert);
            acc.aux += l1_loss(fwd[t].head_prior, expert) + l1_loss(fwd[t].head_meas, expert);
        }
    }

    const double denom = only_step >= 0 ? 1.0 : static_cast<double>(steps);
    LossBreakdown out;
    out.main = acc.main / denom;
    out.aux = acc.aux / denom;
    out.total = out.main + aux_coeff * out.aux;
    if (!std::isfinite(out.total))
        throw NumericalError("episode_loss: non-finite loss");
    if (grads == nullptr) return out;

    // Backward pass, truncated windows processed independently.
    const size_t lat = static_cast<size_t>(model.cfg.latent_dim);
    const size_t window = only_step >= 0 ? 1 : static_cast<size_t>(bptt_window);
    const size_t first = only_step >= 0 ? static_cast<size_t>(only_step) : 0;
    const size_t last = only_step >= 0 ? static_cast<size_t>(only_step) + 1 : steps;

    size_t hi = last;
    while (hi > first) {
        const size_t lo = hi > first + window ? hi - window : first;
        Vec carry_dz, carry_dh;
        for (size_t ti = hi; ti-- > lo;) {
            const StepInputs& in = record.steps[ti];
            const StepForward& f = fwd[ti];
            const Vec expert = in.expert.as_vec();
            const bool losses_here = only_step < 0 || static_cast<size_t>(only_step) == ti;

            Vec dz(lat, 0.0), dz_tilde(lat, 0.0), dr(lat, 0.0);
            if (losses_here) {
                const double scale = 1.0 / denom;
                Vec g = l1_loss_grad(f.head_main, expert);
                scale_inplace(g, scale);
                add_inplace(dz, model.waypoint_head.backward(params, f.wp_main, g, *grads));

                g = l1_loss_grad(f.head_prior, expert);
                scale_inplace(g, aux_coeff * scale);
                add_inplace(dz_tilde, model.waypoint_head.backward(params, f.wp_prior, g, *grads));

                g = l1_loss_grad(f.head_meas, expert);
                scale_inplace(g, aux_coeff * scale);
                add_inplace(dr, model.waypoint_head.backward(params, f.wp_meas, g, *grads));
            }
            if (!carry_dz.empty()) add_inplace(dz, carry_dz);
            Vec dh = carry_dh.empty() ? Vec(states[ti].h.size(), 0.0) : carry_dh;

            if (ti == 0) {
                // z0 = r0, h0 = h0_mlp(z0): the hidden-state gradient folds
                // back into the measurement.
                add_inplace(dz, model.prior.h0_mlp.backward(params, f.filter.h0, dh, *grads));
                add_inplace(dr, dz);
                add_inplace(dr, dz_tilde);  // z~0 == z0 == r0
                model.encoder.backward(params, f.filter.enc, dr, 0.0, *grads);
                carry_dz.clear();
                carry_dh.clear();
                continue;
            }

            // fuse: z = z~ + K .* (r - z~)
            const Vec residual = sub(f.filter.r, f.filter.z_tilde);
            double dsigma = 0.0;
            if (model.cfg.gain_mode == GainMode::Learnable) {
                Vec dk(lat, 0.0);
                for (size_t i = 0; i < lat; ++i) dk[i] = dz[i] * residual[i];
                const GainNetwork::Grad gg =
                    model.gain.backward(params, f.filter.gain, dk, *grads);
                for (size_t i = 0; i < lat; ++i) {
                    dr[i] += gg.dresidual[i];
                    dz_tilde[i] -= gg.dresidual[i];
                }
                dsigma = gg.dsigma;
            }
            for (size_t i = 0; i < lat; ++i) {
                dr[i] += dz[i] * f.filter.k[i];
                dz_tilde[i] += dz[i] * (1.0 - f.filter.k[i]);
            }

            model.encoder.backward(params, f.filter.enc, dr, dsigma, *grads);
            const PriorPredictor::Grad pg =
                model.prior.backward(params, f.filter.prior, dh, dz_tilde, *grads);
            carry_dz = pg.dz_prev;
            carry_dh = pg.dh_prev;
        }
        hi = lo;
    }
    return out;
}

LossBreakdown step_loss(const Model& model, const ParamSet& params, const EpisodeRecord& record,
                        size_t t, double aux_coeff, ParamSet* grads) {
    require(t < record.steps.size(), "step_loss: step index out of range");
    return episode_loss_range(model, params, record, aux_coeff, 1, grads,
                              static_cast<long>(t));
}

TrainReport train(const TrainConfig& cfg, Model& model, const std::vector<World>& train_worlds,
                  const std::vector<World>& val_worlds, const EnvConfig& env_cfg) {
    require(!train_worlds.empty(), "train: no training worlds");
    require(cfg.lr > 0.0, "train: lr must be positive");
    require(cfg.batch_episodes >= 1, "train: batch_episodes must be >= 1");
    require(cfg.aux_coeff >= 0.0, "train: aux_coeff must be non-negative");

    TrainReport report;
    AdamState adam = AdamState::init(model.params);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const RolloutMode mode =
            epoch < cfg.warmup_epochs ? RolloutMode::TeacherForced : RolloutMode::ClosedLoop;

        double main_sum = 0.0, aux_sum = 0.0;
        int episode_count = 0;

        for (size_t base = 0; base < train_worlds.size(); base += static_cast<size_t>(cfg.batch_episodes)) {
            const int batch =
                static_cast<int>(std::min(static_cast<size_t>(cfg.batch_episodes),
                                          train_worlds.size() - base));
            std::vector<ParamSet> episode_grads(static_cast<size_t>(batch));
            std::vector<LossBreakdown> episode_losses(static_cast<size_t>(batch));

            parallel_for_indexed(batch, [&](int bi) {
                const size_t wi = base + static_cast<size_t>(bi);
                EpisodeRecord record;
                const uint64_t ep_seed =
                    splitmix64(splitmix64(cfg.seed ^ 0x747261696eULL) ^
                               (static_cast<uint64_t>(epoch) << 20 | wi));
                env::rollout(model, model.params, train_worlds[wi], mode, env_cfg, ep_seed, &record);
                ParamSet g = model.params.zeros_like();
                episode_losses[static_cast<size_t>(bi)] =
                    episode_loss(model, model.params, record, cfg.aux_coeff, cfg.bptt_window, &g);
                episode_grads[static_cast<size_t>(bi)] = std::move(g);
            });

            // Fixed-order reduction keeps training bit-reproducible.
            ParamSet batch_grads = model.params.zeros_like();
            for (int bi = 0; bi < batch; ++bi) {
                const ParamSet& g = episode_grads[static_cast<size_t>(bi)];
                for (size_t e = 0; e < batch_grads.size(); ++e) {
                    auto& dst = batch_grads.entries()[e].value;
                    const auto& src = g.entries()[e].value;
                    if (std::holds_alternative<Mat>(dst))
                        add_inplace(std::get<Mat>(dst), std::get<Mat>(src));
                    else
                        add_inplace(std::get<Vec>(dst), std::get<Vec>(src));
                }
                main_sum += episode_losses[static_cast<size_t>(bi)].main;
                aux_sum += episode_losses[static_cast<size_t>(bi)].aux;
                episode_count += 1;
            }
            const double inv_batch = 1.0 / static_cast<double>(batch);
            for (auto& e : batch_grads.entries()) {
                if (std::holds_alternative<Mat>(e.value))
                    scale_inplace(std::get<Mat>(e.value), inv_batch);
                else
                    scale_inplace(std::get<Vec>(e.value), inv_batch);
            }
            adam_step(model.params, batch_grads, adam, cfg.lr);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.main_loss = main_sum / std::max(1, episode_count);
        stats.aux_loss = aux_sum / std::max(1, episode_count);

        if (!std::isfinite(stats.main_loss) ||
            stats.main_loss + cfg.aux_coeff * stats.aux_loss > cfg.divergence_threshold) {
            report.diverged = true;
            report.diagnostic = "training diverged at epoch " + std::to_string(epoch);
            report.epochs.push_back(stats);
            return report;
        }

        if (!val_worlds.empty()) {
            std::vector<env::Episode> eps(val_worlds.size());
            parallel_for_indexed(static_cast<int>(val_worlds.size()), [&](int i) {
                const uint64_t ep_seed = splitmix64(cfg.seed ^ 0x76616cULL) + static_cast<uint64_t>(i);
                eps[static_cast<size_t>(i)] =
                    env::rollout(model, model.params, val_worlds[static_cast<size_t>(i)],
                                 RolloutMode::ClosedLoop, env_cfg, ep_seed);
            });
            stats.validation = env::compute_metrics(eps, env_cfg.success_radius);
        }

        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(std::move(stats));
    }
    return report;
}

}  // namespace nk::train
