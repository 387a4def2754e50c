// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nk {

void RunConfig::finalize() {
    model.feat_dim = env.landmark_count;
    model.pos_scale = env.pos_scale;
    model.goal_dim = 8;  // width of the environment's goal encoding
    train.seed = seed;
}

RunConfig default_config() {
    RunConfig cfg;
    cfg.finalize();
    return cfg;
}

namespace {

struct Cursor {
    std::string file;
    int line = 0;
};

[[noreturn]] void fail(const Cursor& at, const std::string& msg) {
    throw ConfigError(at.file + ":" + std::to_string(at.line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, double lo, double hi, const Cursor& at) {
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') fail(at, "expected a number, got '" + raw + "'");
    if (!(v >= lo && v <= hi))
        fail(at, "value " + raw + " outside allowed range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
    return v;
}

long long parse_int(const std::string& raw, long long lo, long long hi, const Cursor& at) {
    long long v = 0;
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size())
        fail(at, "expected an integer, got '" + raw + "'");
    if (v < lo || v > hi)
        fail(at, "value " + raw + " outside allowed range [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
    return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Cursor&)>;

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto num = [&t](const char* key, double lo, double hi, auto assign) {
            t[key] = [lo, hi, assign](RunConfig& c, const std::string& raw, const Cursor& at) {
                assign(c, parse_double(raw, lo, hi, at));
            };
        };
        auto integer = [&t](const char* key, long long lo, long long hi, auto assign) {
            t[key] = [lo, hi, assign](RunConfig& c, const std::string& raw, const Cursor& at) {
                assign(c, parse_int(raw, lo, hi, at));
            };
        };

        integer("model.latent_dim", 2, 512, [](RunConfig& c, long long v) { c.model.latent_dim = static_cast<int>(v); });
        integer("model.hidden_dim", 2, 512, [](RunConfig& c, long long v) { c.model.hidden_dim = static_cast<int>(v); });
        integer("model.wp_embed_dim", 1, 128, [](RunConfig& c, long long v) { c.model.wp_embed_dim = static_cast<int>(v); });
        integer("model.pos_embed_dim", 1, 128, [](RunConfig& c, long long v) { c.model.pos_embed_dim = static_cast<int>(v); });
        integer("model.enc_hidden", 2, 1024, [](RunConfig& c, long long v) { c.model.enc_hidden = static_cast<int>(v); });
        integer("model.prior_proj_hidden", 2, 512, [](RunConfig& c, long long v) { c.model.prior_proj_hidden = static_cast<int>(v); });
        integer("model.wp_head_hidden", 2, 512, [](RunConfig& c, long long v) { c.model.wp_head_hidden = static_cast<int>(v); });
        t["model.gain_mode"] = [](RunConfig& c, const std::string& raw, const Cursor& at) {
            if (raw == "learnable") c.model.gain_mode = GainMode::Learnable;
            else if (raw == "fixed") c.model.gain_mode = GainMode::Fixed;
            else fail(at, "gain_mode must be 'learnable' or 'fixed', got '" + raw + "'");
        };
        num("model.fixed_gain_value", 1e-9, 1.0 - 1e-9, [](RunConfig& c, double v) { c.model.fixed_gain_value = v; });

        integer("memory.capacity", 1, 4096, [](RunConfig& c, long long v) { c.model.memory_capacity = static_cast<int>(v); });
        num("memory.threshold", 0.0, 1.0, [](RunConfig& c, double v) { c.model.memory_threshold = v; });

        integer("env.horizon", 0, 100000, [](RunConfig& c, long long v) { c.env.horizon = static_cast<int>(v); });
        num("env.max_step", 1e-6, 100.0, [](RunConfig& c, double v) { c.env.max_step = v; });
        num("env.success_radius", 0.1, 1000.0, [](RunConfig& c, double v) { c.env.success_radius = v; });
        num("env.stop_eps", 0.0, 100.0, [](RunConfig& c, double v) { c.env.stop_eps = v; });
        integer("env.landmark_count", 1, 1024, [](RunConfig& c, long long v) { c.env.landmark_count = static_cast<int>(v); });
        num("env.landmark_radius", 0.0, 100.0, [](RunConfig& c, double v) { c.env.landmark_radius = v; });
        num("env.feature_length_scale", 1.0, 10000.0, [](RunConfig& c, double v) { c.env.feature_length_scale = v; });
        num("env.feature_noise_std", 0.0, 10.0, [](RunConfig& c, double v) { c.env.feature_noise_std = v; });
        num("env.pos_noise_std", 0.0, 1000.0, [](RunConfig& c, double v) { c.env.pos_noise_std = v; });
        num("env.corrupt_prob", 0.0, 1.0, [](RunConfig& c, double v) { c.env.corrupt_prob = v; });
        num("env.corrupt_feature_factor", 0.0, 1.0, [](RunConfig& c, double v) { c.env.corrupt_feature_factor = v; });
        num("env.corrupt_feature_noise_std", 0.0, 10.0, [](RunConfig& c, double v) { c.env.corrupt_feature_noise_std = v; });
        num("env.corrupt_pos_noise_std", 0.0, 10000.0, [](RunConfig& c, double v) { c.env.corrupt_pos_noise_std = v; });
        num("env.process_noise_std", 0.0, 100.0, [](RunConfig& c, double v) { c.env.process_noise_std = v; });
        num("env.arena_margin", 10.0, 100000.0, [](RunConfig& c, double v) { c.env.arena_margin = v; });
        num("env.landmark_margin", 1.0, 10000.0, [](RunConfig& c, double v) { c.env.landmark_margin = v; });
        num("env.pos_scale", 1.0, 100000.0, [](RunConfig& c, double v) { c.env.pos_scale = v; });

        num("train.lr", 1e-12, 1.0, [](RunConfig& c, double v) { c.train.lr = v; });
        integer("train.batch_episodes", 1, 4096, [](RunConfig& c, long long v) { c.train.batch_episodes = static_cast<int>(v); });
        num("train.aux_coeff", 0.0, 100.0, [](RunConfig& c, double v) { c.train.aux_coeff = v; });
        integer("train.epochs", 0, 1000000, [](RunConfig& c, long long v) { c.train.epochs = static_cast<int>(v); });
        integer("train.warmup_epochs", 0, 1000000, [](RunConfig& c, long long v) { c.train.warmup_epochs = static_cast<int>(v); });
        integer("train.bptt_window", 1, 100000, [](RunConfig& c, long long v) { c.train.bptt_window = static_cast<int>(v); });
        integer("train.train_worlds", 1, 100000, [](RunConfig& c, long long v) { c.train_world_count = static_cast<int>(v); });
        integer("train.val_worlds", 0, 100000, [](RunConfig& c, long long v) { c.val_world_count = static_cast<int>(v); });
        num("train.divergence_threshold", 1.0, 1e30, [](RunConfig& c, double v) { c.train.divergence_threshold = v; });

        integer("eval.episodes", 1, 1000000, [](RunConfig& c, long long v) { c.eval.episodes = static_cast<int>(v); });
        t["eval.split"] = [](RunConfig& c, const std::string& raw, const Cursor& at) {
            if (raw != "easy" && raw != "hard" && raw != "full")
                fail(at, "split must be easy, hard, or full, got '" + raw + "'");
            c.eval.split = raw;
        };

        integer("lab.drift_episodes", 1, 100000, [](RunConfig& c, long long v) { c.lab.drift_episodes = static_cast<int>(v); });
        integer("lab.drift_horizon", 1, 100000, [](RunConfig& c, long long v) { c.lab.drift_horizon = static_cast<int>(v); });
        integer("lab.ablation_seeds", 1, 100, [](RunConfig& c, long long v) { c.lab.ablation_seeds = static_cast<int>(v); });
        integer("lab.ablation_eval_episodes", 1, 100000, [](RunConfig& c, long long v) { c.lab.ablation_eval_episodes = static_cast<int>(v); });

        integer("run.seed", 0, 9007199254740992LL, [](RunConfig& c, long long v) { c.seed = static_cast<uint64_t>(v); });
        t["run.out_dir"] = [](RunConfig& c, const std::string& raw, const Cursor&) { c.out_dir = raw; };
        return t;
    }();
    return table;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);

    RunConfig cfg;
    Cursor at{path, 0};
    std::string section;
    std::string line;
    while (std::getline(f, line)) {
        at.line += 1;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(at, "malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "model" && section != "memory" && section != "env" &&
                section != "train" && section != "eval" && section != "lab" && section != "run")
                fail(at, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail(at, "expected 'key = value', got '" + s + "'");
        if (section.empty()) fail(at, "key outside any [section]");
        const std::string key = section + "." + trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const auto it = key_table().find(key);
        if (it == key_table().end()) fail(at, "unknown key '" + key + "'");
        it->second(cfg, value, at);
    }
    cfg.finalize();
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    const auto it = key_table().find(key);
    if (it == key_table().end()) throw ConfigError("unknown key '" + key + "'");
    Cursor at{"<override>", 0};
    it->second(cfg, value, at);
    cfg.finalize();
}

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    return buf;
}

}  // namespace nk
