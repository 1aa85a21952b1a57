// tribaker: command-line driver for the open tri-baker map experiments.

#include <charconv>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "tribaker/errors.hpp"
#include "tribaker/harness.hpp"

using namespace tribaker;

namespace {

struct Options {
    RunConfig config;
    std::string family;
    std::vector<int> ks;
    std::string k_range;
    std::vector<int> first;
    std::string out;
    std::vector<std::string> formats;
    bool no_cache = false;
};

std::vector<int> parse_range(const std::string& text) {
    const auto sep = text.find_first_of(":-");
    if (sep == std::string::npos) throw UsageError("--k-range expects LO:HI, got '" + text + "'");
    int lo = 0, hi = 0;
    auto parse = [&text](std::string_view s, int& v) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) throw UsageError("--k-range expects LO:HI, got '" + text + "'");
    };
    parse(std::string_view(text).substr(0, sep), lo);
    parse(std::string_view(text).substr(sep + 1), hi);
    if (lo > hi) throw UsageError("--k-range: LO must not exceed HI");
    std::vector<int> out;
    for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
}

// Folds the raw flag values into the config.
RunConfig finish(Options& o) {
    RunConfig& c = o.config;
    if (!o.family.empty()) {
        if (o.family == "both")
            c.families = {Family::Shift, Family::Intersection};
        else
            c.families = {parse_family(o.family)};
    }
    if (!o.ks.empty() || !o.k_range.empty()) {
        c.ks = o.ks;
        if (!o.k_range.empty()) {
            const auto r = parse_range(o.k_range);
            c.ks.insert(c.ks.end(), r.begin(), r.end());
        }
    }
    if (!o.first.empty()) c.m_values = o.first;
    if (!o.out.empty()) c.out = o.out;
    if (!o.formats.empty()) {
        c.formats.clear();
        for (const auto& f : o.formats) c.formats.push_back(parse_format(f));
    }
    if (o.no_cache) c.use_cache = false;
    c.validate();
    return c;
}

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help,
                      std::map<std::string, std::unique_ptr<Options>>& all) {
    auto& o = *all.emplace(name, std::make_unique<Options>()).first->second;
    o.config = default_config(name);
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--l", o.config.l, "qutrit count, D = 3^l (1..7)")->capture_default_str();
    sub->add_option("--family", o.family, "shift, intersection or both");
    sub->add_option("--k", o.ks, "member index (repeatable)");
    sub->add_option("--k-range", o.k_range, "member range LO:HI");
    sub->add_option("--grid", o.config.grid, "Husimi grid size G (0 = default)");
    sub->add_option("--bins", o.config.bins, "histogram bins")->capture_default_str();
    sub->add_option("--first", o.first, "m values for <nr>_m averages (repeatable)");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--format", o.formats, "csv, json or pgm (repeatable)");
    sub->add_option("--seed", o.config.seed, "Monte-Carlo seed")->capture_default_str();
    sub->add_flag("--no-cache", o.no_cache, "do not read or write the operator cache");
    return sub;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Open tri-baker maps: spectra, Husimi functions, norm ratios and the acceptance suite"};
    app.require_subcommand(1);
    std::map<std::string, std::unique_ptr<Options>> opts;

    add_command(app, "spectrum", "eigenvalue spectra of open maps", opts);
    add_command(app, "histogram", "|lambda| histograms", opts);
    auto* husimi = add_command(app, "husimi", "Husimi grids of h_j, Q_j and I_rep", opts);
    husimi->add_option("--j", opts["husimi"]->config.husimi.states, "resonance index j for h_j (repeatable)");
    husimi->add_option("--q", opts["husimi"]->config.husimi.cumulative, "index j for Q_j (repeatable)");
    husimi->add_flag("--irep", opts["husimi"]->config.husimi.repeller, "include I_rep");
    add_command(app, "nr-scan", "norm-ratio tables per family", opts);
    auto* classical = add_command(app, "classical", "exact and Monte-Carlo area sequences, escape rates", opts);
    classical->add_option("--steps", opts["classical"]->config.steps, "number of map steps T")->capture_default_str();
    classical->add_option("--samples", opts["classical"]->config.samples, "Monte-Carlo samples N")
        ->capture_default_str();
    auto* acceptance = app.add_subcommand("acceptance", "run the acceptance suite");
    std::string acc_out = "out";
    bool acc_no_cache = false;
    acceptance->add_option("--out", acc_out, "directory for acceptance.json")->capture_default_str();
    acceptance->add_flag("--no-cache", acc_no_cache, "recompute every operator and spectrum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::Usage);
    }

    try {
        if (acceptance->parsed()) {
            RunConfig config;
            config.out = acc_out;
            config.use_cache = !acc_no_cache;
            const auto report = cmd_acceptance(config, &std::cerr);
            for (const auto& c : report.criteria) std::cout << format_criterion_line(c) << '\n';
            std::cout << (report.passed() ? "acceptance: PASS" : "acceptance: FAIL") << std::endl;
            return static_cast<int>(report.passed() ? ExitCode::Ok : ExitCode::Acceptance);
        }
        for (auto* sub : app.get_subcommands()) {
            const auto name = sub->get_name();
            const RunConfig config = finish(*opts.at(name));
            RunManifest m;
            if (name == "spectrum") m = cmd_spectrum(config);
            else if (name == "histogram") m = cmd_histogram(config);
            else if (name == "husimi") m = cmd_husimi(config);
            else if (name == "nr-scan") m = cmd_nr_scan(config);
            else if (name == "classical") m = cmd_classical(config);
            for (const auto& f : m.files) std::cout << f.sha256 << "  " << (config.out / f.name).string() << '\n';
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << std::endl;
        return static_cast<int>(ExitCode::Usage);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return static_cast<int>(ExitCode::Numerical);
    }
    return 0;
}
