// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "neurokalman/drift.hpp"
#include "neurokalman/io.hpp"
#include "neurokalman/threads.hpp"
#include "neurokalman/verify.hpp"

namespace nk::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct LoadedConfig {
    RunConfig cfg;
    std::string hash;
};

LoadedConfig load(const CommonArgs& args) {
    LoadedConfig lc;
    if (args.config_path.empty()) {
        lc.cfg = default_config();
        lc.hash = fnv1a64_hex("<defaults>");
    } else {
        lc.cfg = load_config(args.config_path);
        lc.hash = fnv1a64_hex(io::read_file(args.config_path));
    }
    for (const std::string& ov : args.overrides) {
        apply_override(lc.cfg, ov);
        lc.hash = fnv1a64_hex(lc.hash + ov);
    }
    if (args.seed.has_value()) {
        lc.cfg.seed = *args.seed;
        lc.cfg.finalize();
    }
    lc.cfg.out_dir = args.out_dir;
    return lc;
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}

void write_trace_csv(const env::Episode& ep, const std::string& path) {
    io::Csv csv({"step", "x", "y", "z", "gt_x", "gt_y", "gt_z", "l2_error", "sigma", "mean_gain",
                 "stored_anchor"});
    for (size_t t = 0; t < ep.agent_positions.size(); ++t) {
        const size_t gt = std::min(t, ep.world.path.size() - 1);
        const bool has_trace = t < ep.step_traces.size();
        csv.row({io::fmt(static_cast<int>(t)), io::fmt(ep.agent_positions[t][0]),
                 io::fmt(ep.agent_positions[t][1]), io::fmt(ep.agent_positions[t][2]),
                 io::fmt(ep.world.path[gt][0]), io::fmt(ep.world.path[gt][1]),
                 io::fmt(ep.world.path[gt][2]), io::fmt(ep.position_error(static_cast<int>(t))),
                 has_trace ? io::fmt(ep.step_traces[t].sigma) : "",
                 has_trace ? io::fmt(ep.step_traces[t].mean_gain) : "",
                 has_trace ? io::fmt(static_cast<int>(ep.step_traces[t].stored)) : ""});
    }
    csv.write(path);
}

std::vector<std::string> ablation_csv(const std::vector<lab::AblationRow>& rows,
                                      const std::string& out_dir, const std::string& name) {
    io::Csv csv({"variant", "ne", "sr", "osr", "spl"});
    std::string summary = "variant            NE        SR      OSR      SPL\n";
    char line[160];
    for (const lab::AblationRow& r : rows) {
        csv.row({r.variant, io::fmt(r.ne), io::fmt(r.sr), io::fmt(r.osr), io::fmt(r.spl)});
        std::snprintf(line, sizeof(line), "%-16s %8.2f  %7.3f  %7.3f  %7.3f\n", r.variant.c_str(),
                      r.ne, r.sr, r.osr, r.spl);
        summary += line;
    }
    csv.write(out_dir + "/" + name + ".csv");
    io::write_file(out_dir + "/" + name + "_summary.txt", summary);
    std::fputs(summary.c_str(), stdout);
    return {name + ".csv", name + "_summary.txt"};
}

}  // namespace

int cmd_train(const CommonArgs& args) {
    return run_guarded([&] {
        const LoadedConfig lc = load(args);
        const RunConfig& cfg = lc.cfg;
        fs::create_directories(cfg.out_dir);
        io::DirLock lock(cfg.out_dir);

        Model model = Model::create(cfg.model, cfg.seed);
        const auto train_worlds =
            lab::make_worlds(cfg.seed ^ 0x545257ULL, cfg.train_world_count, "full", cfg.env);
        const auto val_worlds =
            lab::make_worlds(cfg.seed ^ 0x56414cULL, cfg.val_world_count, "full", cfg.env);

        train::TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        const train::TrainReport report = train::train(tc, model, train_worlds, val_worlds, cfg.env);

        save_checkpoint(model.params, cfg.out_dir + "/checkpoint.nkcp");
        io::Csv csv({"epoch", "main_loss", "aux_loss", "ne", "sr", "osr", "spl"});
        for (const train::EpochStats& e : report.epochs) {
            csv.row({io::fmt(e.epoch), io::fmt(e.main_loss), io::fmt(e.aux_loss),
                     io::fmt(e.validation.ne), io::fmt(e.validation.sr), io::fmt(e.validation.osr),
                     io::fmt(e.validation.spl)});
            std::printf("epoch %d: main=%.5f aux=%.5f val NE=%.2f SR=%.3f (%.1fs)\n", e.epoch,
                        e.main_loss, e.aux_loss, e.validation.ne, e.validation.sr, e.wall_seconds);
        }
        csv.write(cfg.out_dir + "/training_curve.csv");
        io::write_manifest(cfg.out_dir, lc.hash, {"checkpoint.nkcp", "training_curve.csv"});

        if (report.diverged) {
            std::fprintf(stderr, "error: %s\n", report.diagnostic.c_str());
            return kExitRuntime;
        }
        return kExitOk;
    });
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint, const std::string& split) {
    return run_guarded([&] {
        LoadedConfig lc = load(args);
        RunConfig& cfg = lc.cfg;
        if (!split.empty()) {
            if (split != "easy" && split != "hard" && split != "full")
                throw ConfigError("split must be easy, hard, or full, got '" + split + "'");
            cfg.eval.split = split;
        }
        fs::create_directories(cfg.out_dir);
        io::DirLock lock(cfg.out_dir);

        Model model = Model::create(cfg.model, cfg.seed);
        model.params = load_checkpoint(checkpoint, &model.params);

        const auto worlds = lab::make_worlds(cfg.seed ^ 0x455657ULL, cfg.eval.episodes,
                                             cfg.eval.split, cfg.env);
        std::vector<env::Episode> episodes(worlds.size());
        parallel_for_indexed(static_cast<int>(worlds.size()), [&](int i) {
            episodes[static_cast<size_t>(i)] = env::rollout(
                model, model.params, worlds[static_cast<size_t>(i)], env::RolloutMode::ClosedLoop,
                cfg.env, splitmix64(cfg.seed ^ 0x45564cULL) + static_cast<uint64_t>(i));
        });
        const env::MetricReport rep = env::compute_metrics(episodes, cfg.env.success_radius);

        io::Csv csv({"row", "episode", "ne", "sr", "osr", "spl", "final_dist", "min_dist",
                     "path_len", "straight_dist", "steps", "end_reason"});
        csv.row({"summary", "", io::fmt(rep.ne), io::fmt(rep.sr), io::fmt(rep.osr),
                 io::fmt(rep.spl), "", "", "", "", "", ""});
        for (const auto& r : rep.rows)
            csv.row({"episode", io::fmt(r.episode), "", "", "", "", io::fmt(r.final_dist),
                     io::fmt(r.min_dist), io::fmt(r.path_len), io::fmt(r.straight),
                     io::fmt(r.steps), env::end_reason_name(r.end_reason)});
        csv.write(cfg.out_dir + "/metrics.csv");

        fs::create_directories(cfg.out_dir + "/traces");
        std::vector<std::string> artifacts = {"metrics.csv"};
        for (size_t i = 0; i < episodes.size(); ++i) {
            const std::string rel = "traces/episode_" + std::to_string(i) + ".csv";
            write_trace_csv(episodes[i], cfg.out_dir + "/" + rel);
            artifacts.push_back(rel);
        }
        io::write_manifest(cfg.out_dir, lc.hash, artifacts);

        std::printf("split=%s episodes=%d NE=%.2f SR=%.3f OSR=%.3f SPL=%.3f\n",
                    cfg.eval.split.c_str(), cfg.eval.episodes, rep.ne, rep.sr, rep.osr, rep.spl);
        return kExitOk;
    });
}

int cmd_lab(const CommonArgs& args, const std::string& experiment,
            const std::vector<std::string>& checkpoints) {
    return run_guarded([&] {
        const LoadedConfig lc = load(args);
        const RunConfig& cfg = lc.cfg;
        fs::create_directories(cfg.out_dir);
        io::DirLock lock(cfg.out_dir);
        std::vector<std::string> artifacts;

        auto load_model = [&](const std::string& path) {
            Model m = Model::create(cfg.model, cfg.seed);
            m.params = load_checkpoint(path, &m.params);
            return m;
        };

        if (experiment == "drift") {
            if (checkpoints.empty())
                throw ConfigError("lab drift needs --checkpoint (baseline[,full])");
            Model baseline = load_model(checkpoints.front());
            baseline.cfg.gain_mode = GainMode::DeadReckoning;
            Model full = load_model(checkpoints.back());

            const auto worlds = lab::make_worlds(cfg.seed ^ 0x44525746ULL, cfg.lab.drift_episodes,
                                                 "hard", cfg.env);
            const lab::DriftCurve base = lab::drift_curve(baseline, baseline.params, worlds,
                                                          cfg.env, cfg.lab.drift_horizon, cfg.seed);
            const lab::DriftCurve model_curve = lab::drift_curve(
                full, full.params, worlds, cfg.env, cfg.lab.drift_horizon, cfg.seed);

            io::Csv csv({"step", "dead_reckoning_error", "dead_reckoning_alive", "model_error",
                         "model_alive"});
            const size_t n = std::max(base.steps.size(), model_curve.steps.size());
            for (size_t i = 0; i < n; ++i)
                csv.row({io::fmt(static_cast<int>(i)),
                         i < base.mean_error.size() ? io::fmt(base.mean_error[i]) : "",
                         i < base.n_alive.size() ? io::fmt(base.n_alive[i]) : "",
                         i < model_curve.mean_error.size() ? io::fmt(model_curve.mean_error[i]) : "",
                         i < model_curve.n_alive.size() ? io::fmt(model_curve.n_alive[i]) : ""});
            csv.write(cfg.out_dir + "/drift.csv");

            std::vector<io::Series> series(2);
            series[0].name = "dead reckoning (K=0)";
            for (size_t i = 0; i < base.steps.size(); ++i) {
                series[0].x.push_back(base.steps[i]);
                series[0].y.push_back(base.mean_error[i]);
            }
            series[1].name = "full model";
            for (size_t i = 0; i < model_curve.steps.size(); ++i) {
                series[1].x.push_back(model_curve.steps[i]);
                series[1].y.push_back(model_curve.mean_error[i]);
            }
            io::write_file(cfg.out_dir + "/drift.svg",
                           io::line_plot_svg("L2 position error over time", "step",
                                             "mean error [m]", series));
            artifacts = {"drift.csv", "drift.svg"};
        } else if (experiment == "contraction") {
            io::Csv csv({"lambda", "k", "xi", "eps0", "steps", "diverges", "fixed_point",
                         "final_eps"});
            for (double lambda : {0.95, 1.05, 1.1, 1.2})
                for (double k : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
                    const double xi = 0.1;
                    const lab::ContractionTrace tr = lab::contraction_check(lambda, k, xi, 1.0, 200);
                    csv.row({io::fmt(lambda), io::fmt(k), io::fmt(xi), io::fmt(1.0), io::fmt(200),
                             io::fmt(static_cast<int>(tr.diverges)), io::fmt(tr.fixed_point),
                             io::fmt(tr.epsilon.back())});
                }
            csv.write(cfg.out_dir + "/contraction.csv");
            artifacts = {"contraction.csv"};

            if (!checkpoints.empty()) {
                const Model model = load_model(checkpoints.front());
                const auto worlds = lab::make_worlds(cfg.seed ^ 0x434f4eULL,
                                                     std::min(cfg.lab.drift_episodes, 16), "hard",
                                                     cfg.env);
                const lab::ContractionTrace tr = lab::empirical_contraction(
                    model, model.params, worlds, cfg.env, cfg.lab.drift_horizon, cfg.seed);
                io::Csv ecsv({"step", "observed_error", "bound"});
                for (size_t i = 0; i < tr.epsilon.size(); ++i)
                    ecsv.row({io::fmt(static_cast<int>(i)), io::fmt(tr.epsilon[i]),
                              io::fmt(tr.bound[i])});
                ecsv.write(cfg.out_dir + "/contraction_empirical.csv");
                io::write_file(
                    cfg.out_dir + "/contraction_empirical_summary.txt",
                    "applicable=" + std::to_string(tr.applicable) +
                        "\nlambda_est=" + io::fmt(tr.lambda_est) + "\nxi_est=" + io::fmt(tr.xi_est) +
                        "\nk_est=" + io::fmt(tr.k_est) +
                        "\nbound_satisfaction=" + io::fmt(tr.bound_satisfaction) + "\n");
                artifacts.push_back("contraction_empirical.csv");
                artifacts.push_back("contraction_empirical_summary.txt");

                std::vector<io::Series> series(2);
                series[0].name = "observed";
                series[1].name = "recursion bound";
                for (size_t i = 0; i < tr.epsilon.size(); ++i) {
                    series[0].x.push_back(static_cast<double>(i));
                    series[0].y.push_back(tr.epsilon[i]);
                    series[1].x.push_back(static_cast<double>(i));
                    series[1].y.push_back(tr.bound[i]);
                }
                io::write_file(cfg.out_dir + "/contraction_empirical.svg",
                               io::line_plot_svg("Error vs contraction bound", "step", "error [m]",
                                                 series));
                artifacts.push_back("contraction_empirical.svg");
            }
        } else if (experiment == "ablate-gain") {
            artifacts = ablation_csv(lab::run_ablation(lab::AblationKind::Gain, cfg), cfg.out_dir,
                                     "ablation_gain");
        } else if (experiment == "ablate-memory") {
            artifacts = ablation_csv(lab::run_ablation(lab::AblationKind::Memory, cfg), cfg.out_dir,
                                     "ablation_memory");
        } else if (experiment == "ablate-aux") {
            artifacts = ablation_csv(lab::run_ablation(lab::AblationKind::Aux, cfg), cfg.out_dir,
                                     "ablation_aux");
        } else {
            throw ConfigError("unknown experiment '" + experiment +
                              "' (drift | contraction | ablate-gain | ablate-memory | ablate-aux)");
        }

        io::write_manifest(cfg.out_dir, lc.hash, artifacts);
        return kExitOk;
    });
}

int cmd_verify() {
    try {
        const std::vector<verify::SuiteResult> results = verify::run_all();
        json summary;
        summary["suites"] = json::array();
        bool all_pass = true;
        for (const verify::SuiteResult& r : results) {
            std::printf("[%s] %s (worst deviation %.3g) %s\n", r.pass ? "PASS" : "FAIL",
                        r.name.c_str(), r.worst, r.detail.c_str());
            summary["suites"].push_back(
                {{"name", r.name}, {"pass", r.pass}, {"worst", r.worst}, {"detail", r.detail}});
            all_pass = all_pass && r.pass;
        }
        summary["all_pass"] = all_pass;
        std::printf("%s\n", summary.dump().c_str());
        if (!all_pass) {
            std::fprintf(stderr, "error: property suite failure\n");
            return kExitPropertyFailure;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}

}  // namespace nk::cli
