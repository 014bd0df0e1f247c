// dwarfeval: run kernel sweeps, classify them, and compare configurations.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dwarfeval/dwarfeval.hpp"

namespace fs = std::filesystem;
using namespace dwarfeval;

namespace {

enum Exit { ok = 0, partial = 1, configuration = 2, environment = 3 };

struct Globals {
    std::string config_path;
    std::string out_dir;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string affinity;
    std::optional<unsigned> reps;
    std::vector<std::string> formats;
    std::string backend;
    std::string mask;
};

std::optional<cli::CampaignConfig> load_config(const Globals& g) {
    if (g.config_path.empty()) return std::nullopt;
    return cli::load_campaign(g.config_path);
}

std::vector<evaluation::Format> formats_of(const Globals& g, const std::optional<cli::CampaignConfig>& cfg) {
    if (g.formats.empty()) return cfg ? cfg->formats : std::vector{evaluation::Format::tabular_text};
    std::vector<evaluation::Format> out;
    for (const auto& f : g.formats) {
        const auto fmt = evaluation::parse_format(f);
        if (!fmt) throw Error(ErrorKind::usage, "unknown format '" + f + "'");
        out.push_back(*fmt);
    }
    return out;
}

fs::path output_dir(const Globals& g, const std::optional<cli::CampaignConfig>& cfg, const char* fallback) {
    fs::path dir = !g.out_dir.empty() ? fs::path(g.out_dir) : cfg ? fs::path(cfg->output_dir) : fs::path(fallback);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(ErrorKind::configuration, "cannot create output directory '" + dir.string() + "'");
    return dir;
}

/// Applies command-line overrides and builds the execution config. In strict
/// mode a missing sampler capability or affinity interface is an
/// environment error; otherwise it is a warning.
harness::SweepPlan build_plan(const cli::PlanDecl& decl, const Globals& g) {
    cli::ExecSettings e = decl.exec;
    WorkloadSpec base = decl.base;
    if (g.seed) base.seed = *g.seed;
    if (g.threads) e.threads = *g.threads;
    if (g.reps) e.repetitions = *g.reps;
    if (!g.affinity.empty()) {
        const auto a = parse_affinity(g.affinity);
        if (!a) throw Error(ErrorKind::usage, "affinity must be scatter, compact or none");
        e.affinity = *a;
    }
    if (!g.backend.empty()) e.backend = g.backend;

    harness::ExecutionConfig exec;
    exec.threads = e.threads.value_or(available_cores());
    exec.affinity = e.affinity;
    exec.repetitions = e.repetitions;
    exec.warmup_runs = e.warmup_runs;
    exec.confidence_intervals = e.confidence_intervals;
    exec.toolchain = e.toolchain;
    exec.config_label = e.config_label;
    exec.memory_limit_bytes = e.memory_limit_bytes;
    exec.backend = profiler::make_backend(e.backend, profiler::CapabilityMask::parse(g.mask));

    const auto caps = exec.backend->capabilities();
    if (!caps.complete()) {
        const std::string msg = "sampler backend '" + exec.backend->name() + "' lacks capabilities (has: " +
                                profiler::describe(caps) + "); records will be partial";
        if (g.strict) throw Error(ErrorKind::environment, msg);
        std::cerr << "warning: " << msg << '\n';
    }
    if (harness::effective_affinity(exec.affinity) != exec.affinity) {
        const std::string msg = "thread affinity '" + std::string(to_string(exec.affinity)) + "' unavailable on this host";
        if (g.strict) throw Error(ErrorKind::environment, msg);
        std::cerr << "warning: " << msg << "; threads unpinned\n";
    }
    return harness::make_plan(decl.label, base, decl.sizes, std::move(exec));
}

void print_point(const harness::PointResult& r, const analytics::SeriesPoint* p) {
    const std::string k(to_string(r.spec.kernel));
    if (!p) {
        std::cout << k << " size=" << r.spec.size << " gap: " << (r.skip_reason ? *r.skip_reason : r.invalid_reason.value_or("?"))
                  << std::endl;
        return;
    }
    const auto label = analytics::classify_boundedness(*p);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s size=%llu n=%zu mean=%.3f ms ci=%.3f ms %s (cpu %.1f%% io %.1f%% mem %.1f%%)%s",
                  k.c_str(), static_cast<unsigned long long>(p->size), p->n, p->mean_wall_ms, p->ci_halfwidth_ms,
                  std::string(to_string(label.label)).c_str(), p->cpu_pct, p->io_pct, p->mem_pct,
                  p->wide_ci ? " wide-ci" : "");
    std::cout << buf << std::endl;
}

/// Runs one plan and writes <dir>/<label>.jsonl. Returns true if any point
/// became a gap.
bool run_one(const cli::PlanDecl& decl, const Globals& g, const fs::path& dir, std::vector<analytics::SweepSeries>* keep,
             std::vector<std::string>* files) {
    const auto plan = build_plan(decl, g);
    std::cerr << "running plan '" << plan.label << "' (" << plan.points.size() << " sizes, "
              << plan.exec.repetitions << " repetitions, backend " << plan.exec.backend->name() << ")\n";
    const auto out = harness::run_sweep_detailed(plan, print_point);
    const fs::path file = dir / (decl.label + ".jsonl");
    io::write_series_file(file.string(), {out.series});
    std::cout << "wrote " << file.string() << " (" << out.series.points.size() << " points, " << out.series.gaps.size()
              << " gaps)" << std::endl;
    if (keep) keep->push_back(out.series);
    if (files) files->push_back(file.string());
    return out.partial();
}

void write_reports(const evaluation::ComparisonReport& rep, const std::vector<evaluation::Format>& formats,
                   const fs::path& dir, const std::string& stem) {
    for (auto f : formats) {
        const fs::path file = dir / (stem + std::string(evaluation::file_extension(f)));
        evaluation::emit_report(rep, f, file.string());
        std::cout << "wrote " << file.string() << std::endl;
    }
}

void print_best_summary(const evaluation::ComparisonReport& rep) {
    for (const auto& r : rep.rows) {
        std::cout << to_string(r.kernel) << " / " << r.config << ": ";
        if (r.status == evaluation::RowStatus::incomparable) {
            std::cout << "incomparable (no common size)\n";
            continue;
        }
        const auto* b = r.best();
        std::cout << "best " << b->toolchain << " (" << evaluation::format_ms(b->mean_wall_ms) << " ms at size "
                  << *r.size << ")";
        if (r.speedup) std::cout << ", speedup " << evaluation::format_ratio(*r.speedup);
        if (r.status == evaluation::RowStatus::uncontested) std::cout << ", uncontested";
        std::cout << '\n';
    }
    if (!rep.moes.empty()) std::cout << "MOEs: " << rep.moes_passed() << " of " << rep.moes.size() << " passed\n";
}

std::pair<std::vector<analytics::SweepSeries>, std::vector<std::string>> read_all(const std::vector<std::string>& paths) {
    std::vector<analytics::SweepSeries> set;
    std::vector<std::string> files;
    for (const auto& p : paths) {
        for (auto& s : io::read_series_file(p)) {
            set.push_back(std::move(s));
            files.push_back(p);
        }
    }
    return {set, files};
}

int cmd_run(const Globals& g, const std::string& label) {
    const auto cfg = load_config(g);
    const auto decl = cli::resolve_plan(cfg, label);
    const auto dir = output_dir(g, cfg, "results");
    return run_one(decl, g, dir, nullptr, nullptr) ? partial : ok;
}

int cmd_sweep(const Globals& g) {
    const auto cfg = load_config(g);
    if (!cfg) throw Error(ErrorKind::usage, "sweep needs --config");
    const auto dir = output_dir(g, cfg, "results");
    bool any_partial = false;
    std::vector<analytics::SweepSeries> set;
    std::vector<std::string> files;
    for (const auto& decl : cfg->plans) {
        try {
            any_partial = run_one(decl, g, dir, &set, &files) || any_partial;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::empty_series) throw;
            std::cerr << "plan '" << decl.label << "': " << e.what() << '\n';
            any_partial = true;
        }
    }
    if (set.size() >= 2) {
        const auto rep = evaluation::compare(set, cfg->moes, files);
        write_reports(rep, formats_of(g, cfg), dir, cfg->name + "-report");
        print_best_summary(rep);
    }
    return any_partial ? partial : ok;
}

int cmd_compare(const Globals& g, const std::vector<std::string>& paths, const std::string& moe_path) {
    const auto cfg = load_config(g);
    auto [set, files] = read_all(paths);
    if (set.size() < 2)
        throw Error(ErrorKind::usage, "compare needs at least 2 series, found " + std::to_string(set.size()));
    std::vector<evaluation::MOE> moes = cfg ? cfg->moes : std::vector<evaluation::MOE>{};
    if (!moe_path.empty()) moes = cli::load_moes(moe_path);
    const auto rep = evaluation::compare(set, moes, files);
    write_reports(rep, formats_of(g, cfg), output_dir(g, cfg, "."), "report");
    print_best_summary(rep);
    return ok;
}

int cmd_classify(const std::vector<std::string>& paths) {
    for (const auto& path : paths) {
        for (const auto& s : io::read_series_file(path)) {
            const auto c = analytics::consistency_check(s);
            std::cout << s.display_name() << '\n';
            for (const auto& [size, label] : c.classification.points) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "  size=%llu %s (dominant %.1f%%, margin %.1f)",
                              static_cast<unsigned long long>(size), std::string(to_string(label.label)).c_str(),
                              label.dominant_pct, label.margin_pct);
                std::cout << buf << '\n';
            }
            std::cout << "  summary: " << c.classification.summary() << ", " << c.describe() << '\n';
        }
    }
    return ok;
}

int cmd_report(const Globals& g, const std::vector<std::string>& paths, const std::string& plot) {
    const bool to_files = !g.out_dir.empty();
    if (!plot.empty()) {
        const auto kind = evaluation::parse_plot_kind(plot);
        if (!kind) throw Error(ErrorKind::usage, "plot kind must be resource_stack or time_vs_size");
        const auto text = evaluation::plot_data(read_all(paths).first, *kind);
        if (!to_files) {
            std::cout << text;
            return ok;
        }
        const fs::path file = output_dir(g, std::nullopt, ".") / ("plot-" + plot + ".csv");
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        if (!(out << text)) throw Error(ErrorKind::io, "cannot write '" + file.string() + "'");
        std::cout << "wrote " << file.string() << std::endl;
        return ok;
    }
    if (paths.size() != 1) throw Error(ErrorKind::usage, "report re-renders exactly one report file");
    const auto rep = evaluation::import_report(paths.front());
    const auto formats = formats_of(g, std::nullopt);
    if (!to_files) {
        for (auto f : formats) std::cout << evaluation::render_report(rep, f);
        return ok;
    }
    write_reports(rep, formats, output_dir(g, std::nullopt, "."), fs::path(paths.front()).stem().string());
    return ok;
}

int cmd_presets() {
    for (const auto& p : harness::presets()) {
        std::cout << p.name << "  " << to_string(p.kernel) << "  " << p.description << "\n  sizes:";
        for (auto s : p.sizes) std::cout << ' ' << s;
        if (!p.interpolated.empty()) {
            std::cout << "\n  interpolated:";
            for (auto s : p.interpolated) std::cout << ' ' << s;
        }
        std::cout << '\n';
    }
    return ok;
}

int exit_code(ErrorKind k) { return k == ErrorKind::environment ? environment : configuration; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dwarfeval: dwarf-kernel workload characterization and configuration comparison"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand
    Globals g;
    app.add_option("--config", g.config_path, "Campaign config file (JSON)")->envname("DWARFEVAL_CONFIG");
    app.add_option("--out-dir", g.out_dir, "Output directory")->envname("DWARFEVAL_OUT_DIR");
    app.add_flag("--strict", g.strict, "Fail with exit 3 when a sampler capability or affinity is unavailable")
        ->envname("DWARFEVAL_STRICT");
    app.add_option("--seed", g.seed, "Input generation seed")->envname("DWARFEVAL_SEED");
    app.add_option("--threads", g.threads, "Kernel threads (default: all available cores)")
        ->envname("DWARFEVAL_THREADS")
        ->check(CLI::PositiveNumber);
    app.add_option("--affinity", g.affinity, "Thread placement: scatter, compact or none")->envname("DWARFEVAL_AFFINITY");
    app.add_option("--reps", g.reps, "Profiled repetitions per size")->envname("DWARFEVAL_REPS")->check(CLI::PositiveNumber);
    app.add_option("--format", g.formats, "Report format: tabular-text, structured-records, delimited-values")
        ->envname("DWARFEVAL_FORMAT")
        ->delimiter(',');
    app.add_option("--backend", g.backend, "Sampler backend: auto, counter or residual")->envname("DWARFEVAL_BACKEND");
    app.add_option("--mask-capabilities", g.mask, "Pretend the listed sampler capabilities are missing (io-wait, mem-stall)")
        ->envname("DWARFEVAL_MASK_CAPABILITIES");

    std::string plan;
    auto* run = app.add_subcommand("run", "Run one sweep plan (from --config or a preset name)");
    run->add_option("--plan", plan, "Plan label or preset name")->required();

    app.add_subcommand("sweep", "Run every plan of the config and compare the results");

    std::vector<std::string> compare_files;
    std::string moe_file;
    auto* compare = app.add_subcommand("compare", "Compare series files and evaluate MOEs");
    compare->add_option("files", compare_files, "Series files")->required();
    compare->add_option("--moe", moe_file, "MOE file (JSON)");

    std::vector<std::string> classify_files;
    auto* classify = app.add_subcommand("classify", "Classify the boundedness of series files");
    classify->add_option("files", classify_files, "Series files")->required();

    std::vector<std::string> report_files;
    std::string plot;
    auto* report = app.add_subcommand("report", "Re-render a report file in any format, or emit plot data");
    report->add_option("files", report_files, "Report file, or series files with --plot")->required();
    report->add_option("--plot", plot, "Plot data kind: resource_stack or time_vs_size");

    app.add_subcommand("presets", "List the shipped sweep presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return configuration;
    }

    try {
        if (run->parsed()) return cmd_run(g, plan);
        if (app.got_subcommand("sweep")) return cmd_sweep(g);
        if (compare->parsed()) return cmd_compare(g, compare_files, moe_file);
        if (classify->parsed()) return cmd_classify(classify_files);
        if (report->parsed()) return cmd_report(g, report_files, plot);
        if (app.got_subcommand("presets")) return cmd_presets();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (e.kind() == ErrorKind::empty_series) return partial;
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return configuration;
    }
    return configuration;
}
