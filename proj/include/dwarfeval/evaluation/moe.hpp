#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dwarfeval/analytics/series.hpp"
#include "dwarfeval/error.hpp"
#include "dwarfeval/types.hpp"

namespace dwarfeval::evaluation {

enum class Metric { mean_wall_ms, cpu_pct, mem_pct, io_pct, speedup_vs_baseline };
enum class Direction { at_most, at_least };
enum class Verdict { pass, fail, not_applicable };

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::mean_wall_ms: return "mean_wall_ms";
    case Metric::cpu_pct: return "cpu_pct";
    case Metric::mem_pct: return "mem_pct";
    case Metric::io_pct: return "io_pct";
    case Metric::speedup_vs_baseline: return "speedup_vs_baseline";
    }
    return "?";
}

inline std::string_view to_string(Direction d) { return d == Direction::at_most ? "at_most" : "at_least"; }

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not_applicable";
    }
    return "?";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
    for (auto m : {Metric::mean_wall_ms, Metric::cpu_pct, Metric::mem_pct, Metric::io_pct, Metric::speedup_vs_baseline})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline std::optional<Direction> parse_direction(std::string_view s) {
    if (s == "at_most") return Direction::at_most;
    if (s == "at_least") return Direction::at_least;
    return std::nullopt;
}

inline std::optional<Verdict> parse_verdict(std::string_view s) {
    for (auto v : {Verdict::pass, Verdict::fail, Verdict::not_applicable})
        if (s == to_string(v)) return v;
    return std::nullopt;
}

/// Which sizes of a matched series an MOE looks at.
struct SizeSelector {
    enum class Mode { largest, all, exact };
    Mode mode = Mode::largest;
    std::uint64_t size = 0; // exact only

    std::string describe() const {
        switch (mode) {
        case Mode::largest: return "largest";
        case Mode::all: return "all";
        case Mode::exact: return std::to_string(size);
        }
        return "?";
    }

    friend bool operator==(const SizeSelector&, const SizeSelector&) = default;
};

struct MoeScope {
    std::optional<Kernel> kernel;
    std::optional<Dwarf> dwarf;
    std::optional<std::string> toolchain;
    std::optional<std::string> config;
    SizeSelector sizes;

    bool matches(const analytics::SeriesLabels& l) const {
        return (!kernel || *kernel == l.kernel) && (!dwarf || *dwarf == l.dwarf) &&
               (!toolchain || *toolchain == l.toolchain) && (!config || *config == l.config);
    }

    std::string describe() const {
        std::string s;
        auto add = [&s](const std::string& part) { s += (s.empty() ? "" : " ") + part; };
        if (kernel) add("kernel=" + std::string(to_string(*kernel)));
        if (dwarf) add("dwarf=" + std::string(to_string(*dwarf)));
        if (toolchain) add("toolchain=" + *toolchain);
        if (config) add("config=" + *config);
        add("sizes=" + sizes.describe());
        return s;
    }

    friend bool operator==(const MoeScope&, const MoeScope&) = default;
};

/// Reference series for speedup_vs_baseline: same kernel, and the given
/// toolchain and/or config.
struct BaselineSelector {
    std::optional<std::string> toolchain;
    std::optional<std::string> config;

    friend bool operator==(const BaselineSelector&, const BaselineSelector&) = default;
};

/// Measure of effectiveness: a threshold on one metric over a scope.
struct MOE {
    std::string id;
    Metric metric = Metric::mean_wall_ms;
    MoeScope scope;
    double threshold = 0.0;
    Direction direction = Direction::at_most;
    std::optional<BaselineSelector> baseline;

    void validate() const {
        if (id.empty()) throw Error(ErrorKind::configuration, "MOE id must not be empty");
        if (!std::isfinite(threshold)) throw Error(ErrorKind::configuration, "MOE '" + id + "': threshold must be finite");
        if (metric == Metric::speedup_vs_baseline && (!baseline || (!baseline->toolchain && !baseline->config)))
            throw Error(ErrorKind::configuration, "MOE '" + id + "': speedup_vs_baseline needs a baseline toolchain or config");
    }

    friend bool operator==(const MOE&, const MOE&) = default;
};

struct MoeResult {
    MOE moe;
    Verdict verdict = Verdict::not_applicable;
    /// Worst value over the scope: the maximum for at_most, the minimum for at_least.
    std::optional<double> measured;
    std::size_t observations = 0;
    std::string detail;

    friend bool operator==(const MoeResult&, const MoeResult&) = default;
};

namespace detail {

inline std::vector<const analytics::SeriesPoint*> select_points(const analytics::SweepSeries& s, const SizeSelector& sel) {
    std::vector<const analytics::SeriesPoint*> out;
    if (s.points.empty()) return out;
    switch (sel.mode) {
    case SizeSelector::Mode::largest: out.push_back(&s.points.back()); break;
    case SizeSelector::Mode::all:
        for (const auto& p : s.points) out.push_back(&p);
        break;
    case SizeSelector::Mode::exact:
        if (const auto* p = s.find(sel.size)) out.push_back(p);
        break;
    }
    return out;
}

inline const analytics::SweepSeries* find_baseline(const analytics::SweepSeries& s, const BaselineSelector& b,
                                                   const std::vector<analytics::SweepSeries>& set) {
    for (const auto& c : set) {
        if (&c == &s || c.labels.kernel != s.labels.kernel) continue;
        if (b.toolchain && c.labels.toolchain != *b.toolchain) continue;
        if (b.config && c.labels.config != *b.config) continue;
        if (!b.toolchain && c.labels.toolchain != s.labels.toolchain) continue;
        if (!b.config && c.labels.config != s.labels.config) continue;
        return &c;
    }
    return nullptr;
}

} // namespace detail

/// Judges one MOE against a series set. not_applicable when the scope
/// matches no measured point.
inline MoeResult evaluate_moe(const MOE& moe, const std::vector<analytics::SweepSeries>& set) {
    if (set.empty()) throw Error(ErrorKind::invalid_input, "MOE evaluation needs at least one series");
    moe.validate();

    MoeResult r;
    r.moe = moe;
    std::vector<double> values;
    for (const auto& s : set) {
        if (!moe.scope.matches(s.labels)) continue;
        if (moe.metric == Metric::speedup_vs_baseline) {
            const auto* base = detail::find_baseline(s, *moe.baseline, set);
            if (!base) continue;
            // "largest" means the largest size both series measured.
            std::vector<const analytics::SeriesPoint*> pts;
            if (moe.scope.sizes.mode == SizeSelector::Mode::largest) {
                for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
                    if (base->find(it->size)) {
                        pts.push_back(&*it);
                        break;
                    }
                }
            } else {
                pts = detail::select_points(s, moe.scope.sizes);
            }
            for (const auto* p : pts) {
                if (const auto* q = base->find(p->size)) values.push_back(q->mean_wall_ms / p->mean_wall_ms);
            }
            continue;
        }
        for (const auto* p : detail::select_points(s, moe.scope.sizes)) {
            switch (moe.metric) {
            case Metric::mean_wall_ms: values.push_back(p->mean_wall_ms); break;
            case Metric::cpu_pct: values.push_back(p->cpu_pct); break;
            case Metric::mem_pct: values.push_back(p->mem_pct); break;
            case Metric::io_pct: values.push_back(p->io_pct); break;
            case Metric::speedup_vs_baseline: break;
            }
        }
    }

    r.observations = values.size();
    if (values.empty()) {
        r.verdict = Verdict::not_applicable;
        r.detail = "scope matched no measured point";
        return r;
    }
    if (moe.direction == Direction::at_most) {
        r.measured = *std::max_element(values.begin(), values.end());
        r.verdict = *r.measured <= moe.threshold ? Verdict::pass : Verdict::fail;
    } else {
        r.measured = *std::min_element(values.begin(), values.end());
        r.verdict = *r.measured >= moe.threshold ? Verdict::pass : Verdict::fail;
    }
    r.detail = "worst of " + std::to_string(values.size()) + " observation" + (values.size() == 1 ? "" : "s");
    return r;
}

inline std::vector<MoeResult> evaluate_moes(const std::vector<MOE>& moes, const std::vector<analytics::SweepSeries>& set) {
    std::vector<MoeResult> out;
    out.reserve(moes.size());
    for (const auto& m : moes) out.push_back(evaluate_moe(m, set));
    return out;
}

// JSON form, shared by MOE files, campaign configs and report records:
// {"id": "...", "metric": "cpu_pct", "direction": "at_least", "threshold": 90,
//  "scope": {"dwarf": "DLA", "sizes": "all"}, "baseline": {"toolchain": "..."}}

inline nlohmann::ordered_json moe_to_json(const MOE& m) {
    nlohmann::ordered_json j;
    j["id"] = m.id;
    j["metric"] = std::string(to_string(m.metric));
    j["direction"] = std::string(to_string(m.direction));
    j["threshold"] = m.threshold;
    nlohmann::ordered_json scope = nlohmann::ordered_json::object();
    if (m.scope.kernel) scope["kernel"] = std::string(to_string(*m.scope.kernel));
    if (m.scope.dwarf) scope["dwarf"] = std::string(to_string(*m.scope.dwarf));
    if (m.scope.toolchain) scope["toolchain"] = *m.scope.toolchain;
    if (m.scope.config) scope["config"] = *m.scope.config;
    if (m.scope.sizes.mode == SizeSelector::Mode::exact) scope["sizes"] = m.scope.sizes.size;
    else scope["sizes"] = m.scope.sizes.describe();
    j["scope"] = scope;
    if (m.baseline) {
        nlohmann::ordered_json b = nlohmann::ordered_json::object();
        if (m.baseline->toolchain) b["toolchain"] = *m.baseline->toolchain;
        if (m.baseline->config) b["config"] = *m.baseline->config;
        j["baseline"] = b;
    }
    return j;
}

/// Parses one MOE object; errors name the offending field.
template <class J>
MOE moe_from_json(const J& j) {
    auto fail = [&](const std::string& what) -> Error {
        const std::string id = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].template get<std::string>() : "?";
        return Error(ErrorKind::configuration, "MOE '" + id + "': " + what);
    };
    if (!j.is_object()) throw fail("expected an object");
    auto str = [&](const J& obj, const char* key) -> std::string {
        if (!obj.contains(key) || !obj[key].is_string()) throw fail(std::string("field '") + key + "' must be a string");
        return obj[key].template get<std::string>();
    };

    MOE m;
    m.id = str(j, "id");
    const auto metric = parse_metric(str(j, "metric"));
    if (!metric) throw fail("unknown metric '" + str(j, "metric") + "'");
    m.metric = *metric;
    const auto dir = parse_direction(str(j, "direction"));
    if (!dir) throw fail("direction must be at_most or at_least");
    m.direction = *dir;
    if (!j.contains("threshold") || !j["threshold"].is_number()) throw fail("field 'threshold' must be a number");
    m.threshold = j["threshold"].template get<double>();

    if (j.contains("scope")) {
        const auto& s = j["scope"];
        if (!s.is_object()) throw fail("field 'scope' must be an object");
        for (const auto& [key, value] : s.items()) {
            if (key != "kernel" && key != "dwarf" && key != "toolchain" && key != "config" && key != "sizes")
                throw fail("unknown scope field '" + key + "'");
            (void)value;
        }
        if (s.contains("kernel")) {
            m.scope.kernel = parse_kernel(str(s, "kernel"));
            if (!m.scope.kernel) throw fail("unknown kernel '" + str(s, "kernel") + "'");
        }
        if (s.contains("dwarf")) {
            m.scope.dwarf = parse_dwarf(str(s, "dwarf"));
            if (!m.scope.dwarf) throw fail("unknown dwarf '" + str(s, "dwarf") + "'");
        }
        if (s.contains("toolchain")) m.scope.toolchain = str(s, "toolchain");
        if (s.contains("config")) m.scope.config = str(s, "config");
        if (s.contains("sizes")) {
            const auto& z = s["sizes"];
            if (z.is_number_unsigned() || (z.is_number_integer() && z.template get<std::int64_t>() > 0)) {
                m.scope.sizes = {SizeSelector::Mode::exact, z.template get<std::uint64_t>()};
            } else if (z.is_string() && z.template get<std::string>() == "largest") {
                m.scope.sizes = {SizeSelector::Mode::largest, 0};
            } else if (z.is_string() && z.template get<std::string>() == "all") {
                m.scope.sizes = {SizeSelector::Mode::all, 0};
            } else {
                throw fail("scope sizes must be \"largest\", \"all\" or a positive size");
            }
        }
    }
    if (j.contains("baseline")) {
        const auto& b = j["baseline"];
        if (!b.is_object()) throw fail("field 'baseline' must be an object");
        BaselineSelector sel;
        if (b.contains("toolchain")) sel.toolchain = str(b, "toolchain");
        if (b.contains("config")) sel.config = str(b, "config");
        m.baseline = sel;
    }
    m.validate();
    return m;
}

} // namespace dwarfeval::evaluation
