// autoscope: virtual scanning-probe microscope + autonomous experiment engine.
//
// Subcommands:
//   generate <spec>   emit a synthetic sample (json/raw/pgm)
//   run <spec>        run any campaign kind and persist the run record
//   bench <spec>      multi-arm sampling comparison (kind bench_recon)
//   rl-train <spec>   RL training campaigns (kind rl_tip / rl_write)
//   report <run-dir>  CSV summaries + SVG/PGM figures from a run directory
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "autoscope/campaign.hpp"
#include "autoscope/config.hpp"
#include "autoscope/io.hpp"
#include "autoscope/sample.hpp"

namespace {

using namespace autoscope;

struct CommonOpts {
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--out", opts.out, "output directory (overrides spec)");
    cmd->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_flag("--quiet", opts.quiet, "suppress progress output");
}

campaign::CampaignSpec load_spec(const std::string& path, const CommonOpts& opts) {
    auto spec = campaign::CampaignSpec::from_file(path);
    if (opts.seed_set) spec.seed = opts.seed;
    if (!opts.out.empty()) spec.out_dir = opts.out;
    return spec;
}

int run_and_persist(const campaign::CampaignSpec& spec, const CommonOpts& opts) {
    const auto record = campaign::run_campaign(spec);
    const std::string manifest = campaign::write_outputs(record, spec.out_dir);
    if (!opts.quiet) {
        std::printf("kind=%s seed=%llu simulated_time=%.6g s outputs=%s\n", record.kind.c_str(),
                    static_cast<unsigned long long>(record.seed), record.ledger.clock(),
                    manifest.c_str());
    }
    if (record.failed) {
        std::fprintf(stderr, "run failed: %s (partial record persisted)\n",
                     record.fail_reason.c_str());
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual SPM simulator + autonomous experiment engine"};
    app.require_subcommand(1);

    CommonOpts gen_opts, run_opts, bench_opts, rl_opts, rep_opts;
    std::string gen_spec, run_spec, bench_spec, rl_spec, report_dir;

    auto* gen = app.add_subcommand("generate", "emit a synthetic sample");
    gen->add_option("spec", gen_spec, "campaign spec file")->required();
    add_common(gen, gen_opts);

    auto* run = app.add_subcommand("run", "run a campaign spec");
    run->add_option("spec", run_spec, "campaign spec file")->required();
    add_common(run, run_opts);

    auto* bench = app.add_subcommand("bench", "multi-arm sampling comparison");
    bench->add_option("spec", bench_spec, "campaign spec file (kind bench_recon)")->required();
    add_common(bench, bench_opts);

    auto* rl = app.add_subcommand("rl-train", "RL training campaign");
    rl->add_option("spec", rl_spec, "campaign spec file (kind rl_tip / rl_write)")->required();
    add_common(rl, rl_opts);

    auto* rep = app.add_subcommand("report", "summaries + figures from a run directory");
    rep->add_option("run_dir", report_dir, "directory produced by run/bench/rl-train")
        ->required();
    add_common(rep, rep_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto spec = load_spec(gen_spec, gen_opts);
            const Sample sample = gen_domain_phantom(spec.sample, spec.seed);
            std::error_code ec;
            std::filesystem::create_directories(spec.out_dir, ec);
            if (ec) throw std::runtime_error("cannot create " + spec.out_dir);
            save_sample(sample, spec.out_dir + "/sample");
            if (!gen_opts.quiet)
                std::printf("sample %dx%d style written to %s/sample.{json,raw,pgm}\n",
                            spec.sample.width, spec.sample.height, spec.out_dir.c_str());
            return 0;
        }
        if (run->parsed()) return run_and_persist(load_spec(run_spec, run_opts), run_opts);
        if (bench->parsed()) {
            const auto spec = load_spec(bench_spec, bench_opts);
            if (spec.kind != campaign::Kind::bench_recon)
                throw config::ConfigError("bench requires kind = bench_recon");
            return run_and_persist(spec, bench_opts);
        }
        if (rl->parsed()) {
            const auto spec = load_spec(rl_spec, rl_opts);
            if (spec.kind != campaign::Kind::rl_tip && spec.kind != campaign::Kind::rl_write)
                throw config::ConfigError("rl-train requires kind = rl_tip or rl_write");
            return run_and_persist(spec, rl_opts);
        }
        if (rep->parsed()) {
            const std::string out = rep_opts.out.empty() ? report_dir + "/report" : rep_opts.out;
            campaign::write_report(report_dir, out);
            if (!rep_opts.quiet) std::printf("report written to %s\n", out.c_str());
            return 0;
        }
    } catch (const config::ConfigError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
