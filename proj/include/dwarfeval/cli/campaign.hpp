#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dwarfeval/error.hpp"
#include "dwarfeval/evaluation/emit.hpp"
#include "dwarfeval/evaluation/moe.hpp"
#include "dwarfeval/harness/harness.hpp"
#include "dwarfeval/harness/presets.hpp"
#include "dwarfeval/parallel.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::cli {

inline constexpr const char* campaign_schema = "dwarfeval.campaign";
inline constexpr int campaign_schema_version = 1;

/// Execution settings as written in a config file; the sampler backend is
/// named here and created when the plan runs.
struct ExecSettings {
    std::optional<unsigned> threads; // all available cores when unset
    Affinity affinity = Affinity::scatter;
    unsigned repetitions = 30;
    unsigned warmup_runs = 1;
    bool confidence_intervals = true;
    std::string backend = "auto";
    std::string toolchain = "cpp-threads";
    std::string config_label = "local";
    std::optional<std::uint64_t> memory_limit_bytes;
};

struct PlanDecl {
    std::string label;
    std::optional<std::string> preset;
    WorkloadSpec base; // size unused; other workload parameters
    std::vector<std::uint64_t> sizes;
    ExecSettings exec;
};

struct CampaignConfig {
    std::string name = "campaign";
    std::string output_dir = "results";
    std::vector<evaluation::Format> formats{evaluation::Format::tabular_text};
    std::vector<PlanDecl> plans;
    std::vector<evaluation::MOE> moes;

    const PlanDecl* find_plan(const std::string& label) const {
        for (const auto& p : plans)
            if (p.label == label) return &p;
        return nullptr;
    }
};

/// Plan for a preset with default execution settings.
inline PlanDecl plan_from_preset(const harness::Preset& p) {
    PlanDecl d;
    d.label = p.name;
    d.preset = p.name;
    d.base.kernel = p.kernel;
    d.sizes = p.sizes;
    return d;
}

/// Plan by label: the config's own plans first, then the shipped presets.
inline PlanDecl resolve_plan(const std::optional<CampaignConfig>& cfg, const std::string& label) {
    if (cfg) {
        if (const auto* p = cfg->find_plan(label)) return *p;
    }
    if (const auto* p = harness::find_preset(label)) return plan_from_preset(*p);
    throw Error(ErrorKind::configuration, "unknown plan '" + label + "'");
}

namespace detail {

using Json = nlohmann::json;

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::configuration, where + ": " + what);
}

inline void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) bad(where, "unknown key '" + key + "'");
    }
}

inline std::string get_string(const Json& obj, const char* key, const std::string& where) {
    if (!obj[key].is_string()) bad(where, std::string("'") + key + "' must be a string");
    return obj[key].get<std::string>();
}

inline std::uint64_t get_count(const Json& obj, const char* key, const std::string& where) {
    const auto& v = obj[key];
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        bad(where, std::string("'") + key + "' must be a positive integer");
    return v.get<std::uint64_t>();
}

inline void read_exec(const Json& obj, ExecSettings& e, const std::string& where) {
    if (obj.contains("threads")) e.threads = static_cast<unsigned>(get_count(obj, "threads", where));
    if (obj.contains("affinity")) {
        const auto a = parse_affinity(get_string(obj, "affinity", where));
        if (!a) bad(where, "'affinity' must be scatter, compact or none");
        e.affinity = *a;
    }
    if (obj.contains("repetitions")) e.repetitions = static_cast<unsigned>(get_count(obj, "repetitions", where));
    if (obj.contains("warmup_runs")) {
        if (!obj["warmup_runs"].is_number_unsigned()) bad(where, "'warmup_runs' must be a non-negative integer");
        e.warmup_runs = obj["warmup_runs"].get<unsigned>();
    }
    if (obj.contains("confidence_intervals")) {
        if (!obj["confidence_intervals"].is_boolean()) bad(where, "'confidence_intervals' must be true or false");
        e.confidence_intervals = obj["confidence_intervals"].get<bool>();
    }
    if (obj.contains("backend")) e.backend = get_string(obj, "backend", where);
    if (obj.contains("toolchain")) e.toolchain = get_string(obj, "toolchain", where);
    if (obj.contains("config")) e.config_label = get_string(obj, "config", where);
    if (obj.contains("memory_limit_mb")) e.memory_limit_bytes = get_count(obj, "memory_limit_mb", where) << 20;
}

inline void read_workload(const Json& obj, WorkloadSpec& w, const std::string& where) {
    if (obj.contains("seed")) {
        if (!obj["seed"].is_number_unsigned()) bad(where, "'seed' must be a non-negative integer");
        w.seed = obj["seed"].get<std::uint64_t>();
    }
    if (obj.contains("dims")) w.dims = static_cast<std::uint32_t>(get_count(obj, "dims", where));
    if (obj.contains("k")) w.k = static_cast<std::uint32_t>(get_count(obj, "k", where));
    if (obj.contains("max_iter")) w.max_iter = static_cast<std::uint32_t>(get_count(obj, "max_iter", where));
    if (obj.contains("order")) w.order = static_cast<std::uint32_t>(get_count(obj, "order", where));
    if (obj.contains("queries")) w.queries = get_count(obj, "queries", where);
}

#define DWARFEVAL_EXEC_KEYS \
    "threads", "affinity", "repetitions", "warmup_runs", "confidence_intervals", "backend", "toolchain", "config", \
        "memory_limit_mb"
#define DWARFEVAL_WORKLOAD_KEYS "seed", "dims", "k", "max_iter", "order", "queries"

} // namespace detail

/// Parses a campaign config (JSON with "schema" and "schema_version").
/// Every problem is a configuration error naming its location.
inline CampaignConfig parse_campaign(const std::string& text, const std::string& origin = "config") {
    using detail::bad;
    detail::Json root;
    try {
        root = detail::Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        bad(origin, std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) bad(origin, "expected a JSON object");
    detail::check_keys(root, origin,
                       {"schema", "schema_version", "name", "output_dir", "formats", "defaults", "plans", "moes"});
    if (!root.contains("schema") || root["schema"] != campaign_schema)
        bad(origin, std::string("'schema' must be \"") + campaign_schema + "\"");
    if (!root.contains("schema_version") || !root["schema_version"].is_number_integer() ||
        root["schema_version"].get<int>() != campaign_schema_version)
        bad(origin, "unsupported or missing 'schema_version' (expected " + std::to_string(campaign_schema_version) + ")");

    CampaignConfig c;
    if (root.contains("name")) c.name = detail::get_string(root, "name", origin);
    if (root.contains("output_dir")) c.output_dir = detail::get_string(root, "output_dir", origin);
    if (root.contains("formats")) {
        if (!root["formats"].is_array() || root["formats"].empty()) bad(origin, "'formats' must be a non-empty array");
        c.formats.clear();
        for (const auto& f : root["formats"]) {
            const auto fmt = f.is_string() ? evaluation::parse_format(f.get<std::string>()) : std::nullopt;
            if (!fmt) bad(origin, "unknown report format " + f.dump());
            c.formats.push_back(*fmt);
        }
    }

    ExecSettings defaults_exec;
    WorkloadSpec defaults_work;
    if (root.contains("defaults")) {
        const auto& d = root["defaults"];
        if (!d.is_object()) bad(origin, "'defaults' must be an object");
        detail::check_keys(d, origin + " defaults", {DWARFEVAL_EXEC_KEYS, DWARFEVAL_WORKLOAD_KEYS});
        detail::read_exec(d, defaults_exec, origin + " defaults");
        detail::read_workload(d, defaults_work, origin + " defaults");
    }

    if (!root.contains("plans") || !root["plans"].is_array() || root["plans"].empty())
        bad(origin, "'plans' must be a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < root["plans"].size(); ++i) {
        const auto& p = root["plans"][i];
        std::string where = origin + " plans[" + std::to_string(i) + "]";
        if (!p.is_object()) bad(where, "expected an object");
        detail::check_keys(p, where, {"label", "kernel", "preset", "sizes", DWARFEVAL_EXEC_KEYS, DWARFEVAL_WORKLOAD_KEYS});
        PlanDecl d;
        d.exec = defaults_exec;
        d.base = defaults_work;
        if (!p.contains("label")) bad(where, "missing 'label'");
        d.label = detail::get_string(p, "label", where);
        where = origin + " plan '" + d.label + "'";
        if (!labels.insert(d.label).second) bad(where, "duplicate plan label");

        std::optional<Kernel> kernel;
        if (p.contains("kernel")) {
            kernel = parse_kernel(detail::get_string(p, "kernel", where));
            if (!kernel) bad(where, "unknown kernel '" + p["kernel"].get<std::string>() + "'");
        }
        if (p.contains("preset") == p.contains("sizes")) bad(where, "give exactly one of 'preset' or 'sizes'");
        if (p.contains("preset")) {
            const auto name = detail::get_string(p, "preset", where);
            const auto* preset = harness::find_preset(name);
            if (!preset) bad(where, "unknown preset '" + name + "'");
            if (kernel && *kernel != preset->kernel) bad(where, "kernel does not match preset '" + name + "'");
            kernel = preset->kernel;
            d.preset = name;
            d.sizes = preset->sizes;
        } else {
            if (!kernel) bad(where, "'kernel' is required with explicit sizes");
            if (!p["sizes"].is_array() || p["sizes"].empty()) bad(where, "'sizes' must be a non-empty array");
            for (const auto& s : p["sizes"]) {
                if (!s.is_number_unsigned() || s.get<std::uint64_t>() == 0) bad(where, "sizes must be positive integers");
                const auto v = s.get<std::uint64_t>();
                if (!d.sizes.empty() && d.sizes.back() >= v) bad(where, "sizes must strictly ascend");
                d.sizes.push_back(v);
            }
        }
        d.base.kernel = *kernel;
        detail::read_exec(p, d.exec, where);
        detail::read_workload(p, d.base, where);
        try {
            WorkloadSpec probe = d.base;
            probe.size = d.sizes.front();
            probe.validate();
        } catch (const Error& e) {
            bad(where, e.what());
        }
        c.plans.push_back(std::move(d));
    }

    if (root.contains("moes")) {
        if (!root["moes"].is_array()) bad(origin, "'moes' must be an array");
        std::set<std::string> ids;
        for (const auto& m : root["moes"]) {
            auto moe = evaluation::moe_from_json(m);
            if (!ids.insert(moe.id).second) bad(origin, "duplicate MOE id '" + moe.id + "'");
            c.moes.push_back(std::move(moe));
        }
    }
    return c;
}

inline CampaignConfig load_campaign(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::configuration, "cannot read config '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_campaign(text.str(), path);
}

/// Reads a standalone MOE file: {"schema": "dwarfeval.moe", "schema_version": 1, "moes": [...]}.
inline std::vector<evaluation::MOE> load_moes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::configuration, "cannot read MOE file '" + path + "'");
    detail::Json root;
    try {
        root = detail::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        detail::bad(path, std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object() || root.value("schema", "") != "dwarfeval.moe")
        detail::bad(path, "'schema' must be \"dwarfeval.moe\"");
    if (!root.contains("schema_version") || root["schema_version"] != campaign_schema_version)
        detail::bad(path, "unsupported or missing 'schema_version'");
    if (!root.contains("moes") || !root["moes"].is_array()) detail::bad(path, "'moes' must be an array");
    std::vector<evaluation::MOE> out;
    std::set<std::string> ids;
    for (const auto& m : root["moes"]) {
        auto moe = evaluation::moe_from_json(m);
        if (!ids.insert(moe.id).second) detail::bad(path, "duplicate MOE id '" + moe.id + "'");
        out.push_back(std::move(moe));
    }
    return out;
}

} // namespace dwarfeval::cli

#undef DWARFEVAL_EXEC_KEYS
#undef DWARFEVAL_WORKLOAD_KEYS
