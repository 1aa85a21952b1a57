#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "tribaker/checksum.hpp"
#include "tribaker/errors.hpp"
#include "tribaker/harness.hpp"
#include "tribaker/phasespace.hpp"
#include "tribaker/version.hpp"

namespace tribaker {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string stem(const OpeningSpec& spec) {
    return std::string(to_string(spec.family)) + "_l" + std::to_string(spec.l) + "_k" + std::to_string(spec.k);
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Collects the files a command writes, with checksums.
class OutputSink {
public:
    explicit OutputSink(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& bytes) {
        const fs::path path = dir_ / name;
        const fs::path tmp = path.string() + ".partial";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out) throw std::runtime_error("write failed: " + tmp.string());
        }
        fs::rename(tmp, path);
        files_.push_back({name, sha256_hex(bytes), bytes.size()});
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    std::vector<OutputFile> take() { return std::move(files_); }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<OutputFile> files_;
};

MemberDiagnostics diagnostics_of(const OpeningSpec& spec, const ResonanceSet& set) {
    return {spec.family, spec.k, set.residual_max, set.left_residual_max, set.condition,
            set.has_vectors() ? set.excluded_indices() : std::vector<int>{}};
}

json diagnostics_json(const MemberDiagnostics& d) {
    return {{"family", to_string(d.family)},
            {"k", d.k},
            {"residual_max", number(d.residual_max)},
            {"left_residual_max", number(d.left_residual_max)},
            {"condition", number(d.condition)},
            {"excluded", d.excluded}};
}

std::vector<OpeningSpec> member_specs(const RunConfig& config) {
    std::vector<OpeningSpec> out;
    for (Family f : config.families)
        for (int k : config.members()) out.push_back(OpeningSpec::make(f, k, config.l));
    return out;
}

void require_formats(const RunConfig& config, std::initializer_list<OutputFormat> allowed, const char* command) {
    for (OutputFormat f : config.formats)
        if (std::find(allowed.begin(), allowed.end(), f) == allowed.end())
            throw UsageError(std::string(command) + ": output format '" + std::string(to_string(f)) +
                             "' is not supported");
}

bool wants_or_default(const RunConfig& config, OutputFormat format, bool by_default) {
    return config.formats.empty() ? by_default : config.wants(format);
}

ArtifactCache make_cache(const RunConfig& config) {
    return ArtifactCache(config.cache_root.value_or(ArtifactCache::default_root()), config.use_cache);
}

RunManifest start_manifest(const char* command, const RunConfig& config) {
    config.validate();
    RunManifest m;
    m.command = command;
    m.config = config.to_json();
    m.tool_version = kToolVersion;
    m.started_utc = utc_now();
    return m;
}

void finish_manifest(RunManifest& m, OutputSink& sink) {
    m.files = sink.take();
    m.finished_utc = utc_now();
    std::ofstream out(sink.dir() / "manifest.json", std::ios::trunc);
    out << m.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest.json");
}

std::string fmt17(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

json member_meta(const RunConfig& config, const OpeningSpec& spec) {
    return {{"tool_version", kToolVersion},
            {"config", config.to_json()},
            {"family", to_string(spec.family)},
            {"k", spec.k},
            {"l", spec.l},
            {"dimension", QutritRegister::make(spec.l).dim}};
}

} // namespace

std::string_view to_string(OutputFormat format) {
    switch (format) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::Pgm: return "pgm";
    }
    return "?";
}

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    if (name == "pgm") return OutputFormat::Pgm;
    throw UsageError("unknown output format '" + std::string(name) + "' (expected csv, json or pgm)");
}

void RunConfig::validate() const {
    if (l < 1 || l > kMaxQutrits) throw UsageError("l must be in 1.." + std::to_string(kMaxQutrits));
    if (families.empty()) throw UsageError("at least one family is required");
    for (int k : ks)
        if (k < 1 || k > l)
            throw UsageError("member k=" + std::to_string(k) + " outside 1.." + std::to_string(l));
    if (bins < 1) throw UsageError("bins must be >= 1");
    if (grid != 0 && grid < 3) throw UsageError("grid size must be >= 3");
    if (m_values.empty()) throw UsageError("at least one m value is required");
    for (int m : m_values)
        if (m < 1) throw UsageError("m values must be >= 1");
    if (steps < 3) throw UsageError("steps must be >= 3");
    if (steps + 2 * l > kMaxSymbolicDepth) throw UsageError("steps too large for the symbolic depth limit");
    if (samples < 1) throw UsageError("samples must be >= 1");
    const int dim = QutritRegister::make(l).dim;
    auto check_range = [dim](const std::vector<int>& js, const char* what) {
        for (int j : js)
            if (j < 1 || j > dim)
                throw UsageError(std::string(what) + " index " + std::to_string(j) + " outside the valid range 1.." +
                                 std::to_string(dim));
    };
    check_range(husimi.states, "state");
    check_range(husimi.cumulative, "cumulative");
}

std::vector<int> RunConfig::members() const {
    std::set<int> s(ks.begin(), ks.end());
    if (s.empty())
        for (int k = 1; k <= l; ++k) s.insert(k);
    return {s.begin(), s.end()};
}

int RunConfig::grid_size() const { return grid != 0 ? grid : default_grid_size(l); }

bool RunConfig::wants(OutputFormat format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

json RunConfig::to_json() const {
    json fams = json::array();
    for (Family f : families) fams.push_back(to_string(f));
    json fmts = json::array();
    for (OutputFormat f : formats) fmts.push_back(to_string(f));
    return {{"l", l},
            {"families", fams},
            {"k", members()},
            {"grid", grid_size()},
            {"bins", bins},
            {"m_values", m_values},
            {"formats", fmts},
            {"seed", seed},
            {"use_cache", use_cache},
            {"steps", steps},
            {"samples", samples},
            {"husimi",
             {{"states", husimi.states}, {"cumulative", husimi.cumulative}, {"repeller", husimi.repeller}}}};
}

RunConfig default_config(std::string_view command) {
    RunConfig c;
    if (command == "histogram") {
        c.l = 7;
        c.ks = {1, 3, 5, 7};
    } else if (command == "husimi") {
        c.families = {Family::Shift};
    } else if (command == "nr-scan") {
        c.l = 6;
    }
    return c;
}

json RunManifest::to_json() const {
    json files_json = json::array();
    for (const auto& f : files) files_json.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    json diag = json::array();
    for (const auto& d : diagnostics) diag.push_back(diagnostics_json(d));
    return {{"command", command},     {"tool_version", tool_version}, {"config", config},
            {"started_utc", started_utc}, {"finished_utc", finished_utc}, {"files", files_json},
            {"diagnostics", diag}};
}

RunManifest cmd_spectrum(const RunConfig& config) {
    auto manifest = start_manifest("spectrum", config);
    require_formats(config, {OutputFormat::Csv, OutputFormat::Json}, "spectrum");
    ArtifactCache cache = make_cache(config);
    const auto specs = member_specs(config);
    std::vector<ResonanceSet> sets(specs.size());
    detail::parallel_for(specs.size(), [&](std::size_t i) { sets[i] = cache.spectrum(specs[i], true); });

    OutputSink sink(config.out);
    std::ostringstream overlay;
    overlay << std::setprecision(17) << "family,k,j,re_lambda,im_lambda,modulus\n";
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        const auto& set = sets[i];
        const auto name = "spectrum_" + stem(spec);
        if (wants_or_default(config, OutputFormat::Csv, true)) sink.write(name + ".csv", spectrum_csv(set));
        if (config.wants(OutputFormat::Json)) {
            json ev = json::array();
            for (const auto& z : set.eigenvalues) ev.push_back({z.real(), z.imag()});
            sink.write_json(name + ".json", {{"eigenvalues", ev}});
        }
        json meta = member_meta(config, spec);
        meta["diagnostics"] = diagnostics_json(diagnostics_of(spec, set));
        meta["columns"] = "j,re_lambda,im_lambda,modulus,gamma";
        sink.write_json(name + ".meta.json", meta);
        manifest.diagnostics.push_back(diagnostics_of(spec, set));
        for (int j = 0; j < set.dim(); ++j) {
            const auto& z = set.eigenvalues[j];
            overlay << to_string(spec.family) << ',' << spec.k << ',' << j + 1 << ',' << z.real() << ',' << z.imag()
                    << ',' << std::abs(z) << '\n';
        }
    }
    if (specs.size() > 1) sink.write("spectrum_overlay_l" + std::to_string(config.l) + ".csv", overlay.str());
    finish_manifest(manifest, sink);
    return manifest;
}

RunManifest cmd_histogram(const RunConfig& config) {
    auto manifest = start_manifest("histogram", config);
    require_formats(config, {OutputFormat::Csv, OutputFormat::Json}, "histogram");
    ArtifactCache cache = make_cache(config);
    const auto specs = member_specs(config);
    std::vector<ResonanceSet> sets(specs.size());
    detail::parallel_for(specs.size(), [&](std::size_t i) { sets[i] = cache.spectrum(specs[i], false); });

    OutputSink sink(config.out);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        const auto hist = modulus_histogram(sets[i], config.bins);
        const auto name = "histogram_" + stem(spec);
        if (wants_or_default(config, OutputFormat::Csv, true)) sink.write(name + ".csv", histogram_csv(hist));
        if (config.wants(OutputFormat::Json))
            sink.write_json(name + ".json", {{"edges", hist.edges}, {"counts", hist.counts}});
        json meta = member_meta(config, spec);
        meta["bins"] = hist.bins();
        meta["total"] = hist.total();
        meta["mode_bin"] = hist.mode();
        meta["spectral_radius"] = sets[i].spectral_radius();
        meta["columns"] = "bin_lo,bin_hi,count";
        sink.write_json(name + ".meta.json", meta);
        manifest.diagnostics.push_back(diagnostics_of(spec, sets[i]));
    }
    finish_manifest(manifest, sink);
    return manifest;
}

RunManifest cmd_husimi(const RunConfig& config) {
    auto manifest = start_manifest("husimi", config);
    require_formats(config, {OutputFormat::Csv, OutputFormat::Pgm}, "husimi");
    HusimiSelection sel = config.husimi;
    const int dim = QutritRegister::make(config.l).dim;
    if (sel.empty()) {
        sel.repeller = true;
        sel.cumulative = {std::min(1 << config.l, dim)};
    }
    const CoherentFrame frame(dim, config.grid_size());
    OutputSink sink(config.out);

    auto emit = [&](const std::string& name, const PhaseGrid& grid, json meta) {
        const auto nr = norm_ratio(grid, frame);
        meta["grid"] = grid.size();
        meta["nr"] = nr.nr;
        meta["reference_ratio"] = nr.reference_ratio;
        meta["uniform_nr"] = nr.uniform_nr;
        meta["columns"] = "q,p,value";
        if (wants_or_default(config, OutputFormat::Pgm, true))
            sink.write(name + ".pgm", phase_grid_pgm(grid, name + " nr " + fmt17(nr.nr)));
        if (wants_or_default(config, OutputFormat::Csv, true)) sink.write(name + ".csv", phase_grid_csv(grid));
        sink.write_json(name + ".meta.json", meta);
    };

    if (sel.repeller) {
        const auto rep = repeller_operator(config.l, frame);
        json meta = {{"tool_version", kToolVersion}, {"config", config.to_json()}, {"kind", "I_rep"},
                     {"l", config.l}, {"dimension", dim}, {"mask_cells", rep.mask.count_nonzero()}};
        emit("husimi_irep_l" + std::to_string(config.l), rep.husimi, meta);
    }

    if (!sel.states.empty() || !sel.cumulative.empty()) {
        ArtifactCache cache = make_cache(config);
        const auto specs = member_specs(config);
        for (const auto& spec : specs) {
            const auto set = cache.spectrum(spec, true);
            manifest.diagnostics.push_back(diagnostics_of(spec, set));
            struct Item {
                bool cumulative;
                int j;
            };
            std::vector<Item> items;
            for (int j : sel.states) items.push_back({false, j});
            for (int j : sel.cumulative) items.push_back({true, j});
            std::vector<PhaseGrid> grids(items.size());
            detail::parallel_for(items.size(), [&](std::size_t i) {
                grids[i] = items[i].cumulative ? husimi_cumulative(set, items[i].j, frame)
                                               : husimi(set, items[i].j, frame);
            });
            for (std::size_t i = 0; i < items.size(); ++i) {
                const auto& it = items[i];
                json meta = member_meta(config, spec);
                meta["kind"] = it.cumulative ? "Q" : "h";
                meta["j"] = it.j;
                meta["lambda"] = {set.eigenvalues[it.j - 1].real(), set.eigenvalues[it.j - 1].imag()};
                emit("husimi_" + stem(spec) + (it.cumulative ? "_Q" : "_h") + std::to_string(it.j), grids[i], meta);
            }
        }
    }
    finish_manifest(manifest, sink);
    return manifest;
}

RunManifest cmd_nr_scan(const RunConfig& config) {
    auto manifest = start_manifest("nr-scan", config);
    require_formats(config, {OutputFormat::Csv, OutputFormat::Json}, "nr-scan");
    const int dim = QutritRegister::make(config.l).dim;
    const CoherentFrame frame(dim, config.grid_size());
    const auto rep = repeller_operator(config.l, frame);
    ArtifactCache cache = make_cache(config);

    const auto specs = member_specs(config);
    std::vector<NrScanMember> members(specs.size());
    std::vector<MemberDiagnostics> diags(specs.size());
    detail::parallel_for(specs.size(), [&](std::size_t i) {
        const auto set = cache.spectrum(specs[i], true);
        diags[i] = diagnostics_of(specs[i], set);
        members[i] = nr_scan_member(specs[i].k, set, config.m_values, frame);
    });
    manifest.diagnostics = diags;

    OutputSink sink(config.out);
    for (Family family : config.families) {
        NrScanTable table{family, config.l, frame.grid_size(), rep.nr.nr, config.m_values, {}};
        for (std::size_t i = 0; i < specs.size(); ++i)
            if (specs[i].family == family) table.members.push_back(members[i]);
        const auto name = "nr_scan_" + std::string(to_string(family)) + "_l" + std::to_string(config.l);
        if (wants_or_default(config, OutputFormat::Csv, true)) sink.write(name + ".csv", nr_scan_csv(table));
        if (config.wants(OutputFormat::Json)) {
            json rows = json::array();
            for (const auto& m : table.members) {
                json means = json::object();
                for (const auto& [mv, v] : m.mean_nr) means[std::to_string(mv)] = number(v);
                json nh = json::array(), nq = json::array();
                for (double v : m.ratios.nr_h) nh.push_back(number(v));
                for (double v : m.ratios.nr_q) nq.push_back(number(v));
                rows.push_back({{"k", m.k}, {"modulus", m.modulus}, {"nr_h", nh}, {"nr_Q", nq},
                                {"mean_nr", means}, {"excluded", m.ratios.excluded}});
            }
            sink.write_json(name + ".json", {{"threshold", table.threshold}, {"members", rows}});
        }
        json meta = {{"tool_version", kToolVersion},
                     {"config", config.to_json()},
                     {"family", to_string(family)},
                     {"l", config.l},
                     {"dimension", dim},
                     {"grid", frame.grid_size()},
                     {"threshold_nr_irep", rep.nr.nr},
                     {"reference_ratio", rep.nr.reference_ratio},
                     {"uniform_nr", rep.nr.uniform_nr},
                     {"columns", "kind,family,k,j,lambda_modulus,nr_h,nr_Q"}};
        sink.write_json(name + ".meta.json", meta);
    }
    finish_manifest(manifest, sink);
    return manifest;
}

RunManifest cmd_classical(const RunConfig& config) {
    auto manifest = start_manifest("classical", config);
    require_formats(config, {OutputFormat::Csv, OutputFormat::Json}, "classical");
    const auto specs = member_specs(config);
    const int tail = std::max(2, config.steps / 3);
    std::vector<AreaSequence> exact(specs.size()), mc(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        exact[i] = allowed_area_sequence(specs[i], config.steps);
        mc[i] = monte_carlo_area(specs[i], config.steps, config.samples, config.seed);
    }

    OutputSink sink(config.out);
    std::ostringstream rates;
    rates << std::setprecision(17) << "family,k,tail,gamma_exact,gamma_mc,ln_3_2\n";
    json all = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        const double n = static_cast<double>(config.samples);
        std::ostringstream os;
        os << std::setprecision(17) << "t,open_trits,area,log_area,mc_area,mc_sigma,z\n";
        std::vector<double> sigma(config.steps), z(config.steps);
        for (int t = 0; t < config.steps; ++t) {
            const double a = exact[i].areas[t];
            sigma[t] = std::sqrt(a * (1.0 - a) / n);
            z[t] = sigma[t] > 0.0 ? (mc[i].areas[t] - a) / sigma[t] : 0.0;
            os << t + 1 << ',' << exact[i].open_trits[t] << ',' << a << ',' << std::log(a) << ',' << mc[i].areas[t]
               << ',' << sigma[t] << ',' << z[t] << '\n';
        }
        const auto name = "areas_" + stem(spec);
        if (wants_or_default(config, OutputFormat::Csv, true)) sink.write(name + ".csv", os.str());

        const double g_exact = escape_rate(exact[i], tail);
        double g_mc = std::numeric_limits<double>::quiet_NaN();
        try {
            g_mc = escape_rate(mc[i], tail);
        } catch (const NumericalError&) {
        }
        rates << to_string(spec.family) << ',' << spec.k << ',' << tail << ',' << g_exact << ',';
        if (std::isnan(g_mc))
            rates << "nan";
        else
            rates << g_mc;
        rates << ',' << std::log(1.5) << '\n';
        all.push_back({{"family", to_string(spec.family)},
                       {"k", spec.k},
                       {"exact_area", exact[i].areas},
                       {"open_trits", exact[i].open_trits},
                       {"mc_area", mc[i].areas},
                       {"mc_sigma", sigma},
                       {"gamma_exact", g_exact},
                       {"gamma_mc", number(g_mc)}});
    }
    const auto suffix = "_l" + std::to_string(config.l);
    if (wants_or_default(config, OutputFormat::Csv, true)) sink.write("escape_rates" + suffix + ".csv", rates.str());
    if (config.wants(OutputFormat::Json)) sink.write_json("classical" + suffix + ".json", {{"members", all}});
    sink.write_json("classical" + suffix + ".meta.json", {{"tool_version", kToolVersion},
                                                         {"config", config.to_json()},
                                                         {"escape_rate_tail", tail},
                                                         {"seed", config.seed}});
    finish_manifest(manifest, sink);
    return manifest;
}

} // namespace tribaker
