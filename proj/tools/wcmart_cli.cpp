// Command-line front end: check, witness, extend, norm, fourier, sweep.
//
// Exit status: 0 when the command ran (verdicts are in the report),
// 2 for configuration or validation errors, 3 for internal invariant breaches.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "wcmart/wcmart.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

struct Options {
    std::string config;
    std::optional<int> depth;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
    int count = 200;
    int threads = 1;
};

void emit(const Options& opt, const std::string& name, const std::string& body) {
    if (opt.out.empty()) {
        std::cout << body;
        return;
    }
    std::filesystem::create_directories(opt.out);
    const auto path = std::filesystem::path(opt.out) / (name + "." + opt.format);
    std::ofstream f(path);
    if (!f) throw wcmart::ValidationError("cannot write " + path.string());
    f << body;
    std::cerr << "wrote " << path.string() << "\n";
}

void emit_report(const Options& opt, const wcmart::RunReport& r) {
    emit(opt, r.command, opt.format == "csv" ? r.to_csv() : r.to_json().dump(2) + "\n");
}

wcmart::ProblemConfig require_config(const Options& opt) {
    if (opt.config.empty()) throw wcmart::ValidationError("--config is required for this command");
    return wcmart::load_config(opt.config);
}

int depth_or(const Options& opt, const wcmart::ProblemConfig& cfg, int fallback) {
    if (opt.depth) return *opt.depth;
    return cfg.depth.value_or(fallback);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wcmart: weak cancellation in the martingale model"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config, "problem config (JSON)");
        if (needs_config) c->check(CLI::ExistingFile);
        sub->add_option("--depth", opt.depth, "depth N")->check(CLI::Range(1, 40));
        sub->add_option("--seed", opt.seed, "random seed");
        sub->add_option("--out", opt.out, "output directory (default: stdout)");
        sub->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    };
    auto* check = app.add_subcommand("check", "cancellation and weak cancellation verdicts");
    auto* witness = app.add_subcommand("witness", "blow-up curve for a weak cancellation failure");
    auto* extend = app.add_subcommand("extend", "build the extension of phi");
    auto* norm = app.add_subcommand("norm", "exact transform norm per depth");
    auto* fourier = app.add_subcommand("fourier", "Fourier-side verdicts for a translation invariant problem");
    auto* sweep = app.add_subcommand("sweep", "seeded property sweep over random instances");
    for (auto* s : {check, witness, extend, norm, fourier}) add_common(s, true);
    add_common(sweep, false);
    sweep->add_option("--count", opt.count, "number of instances")->check(CLI::NonNegativeNumber);
    sweep->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (check->parsed()) {
            emit_report(opt, wcmart::run_check(require_config(opt)));
        } else if (witness->parsed()) {
            const auto cfg = require_config(opt);
            emit_report(opt, wcmart::run_witness(cfg, depth_or(opt, cfg, 10)));
        } else if (extend->parsed()) {
            emit_report(opt, wcmart::run_extend(require_config(opt)));
        } else if (norm->parsed()) {
            const auto cfg = require_config(opt);
            emit_report(opt, wcmart::run_norm(cfg, depth_or(opt, cfg, 5)));
        } else if (fourier->parsed()) {
            emit_report(opt, wcmart::run_fourier(require_config(opt)));
        } else if (sweep->parsed()) {
            wcmart::SweepOptions so;
            std::optional<wcmart::ProblemConfig> cfg;
            if (!opt.config.empty()) cfg = wcmart::load_config(opt.config);
            so.seed = opt.seed.value_or(cfg && cfg->seed ? *cfg->seed : 0);
            if (opt.depth) so.depth = *opt.depth;
            so.count = opt.count;
            so.threads = opt.threads;
            const auto rep = wcmart::run_sweep(so);
            emit(opt, "sweep", opt.format == "csv" ? rep.to_csv() : rep.to_json().dump(2) + "\n");
        }
    } catch (const wcmart::InvariantError& e) {
        std::cerr << "internal invariant breach: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const wcmart::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitOk;
}
