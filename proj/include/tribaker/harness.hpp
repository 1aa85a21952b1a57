// harness.hpp: experiment commands, run manifests and the acceptance suite

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tribaker/cache.hpp"
#include "tribaker/classical.hpp"

namespace tribaker {

enum class ExitCode : int { Ok = 0, Usage = 1, Numerical = 2, Acceptance = 3 };

enum class OutputFormat { Csv, Json, Pgm };

std::string_view to_string(OutputFormat format);
OutputFormat parse_format(std::string_view name);

/// What cmd_husimi renders. Empty selection means I_rep plus Q_{2^l}.
struct HusimiSelection {
    std::vector<int> states;      ///< h_j
    std::vector<int> cumulative;  ///< Q_j
    bool repeller = false;        ///< I_rep

    bool empty() const noexcept { return states.empty() && cumulative.empty() && !repeller; }
};

struct RunConfig {
    int l = 5;
    std::vector<Family> families{Family::Shift, Family::Intersection};
    std::vector<int> ks;               ///< empty: every member 1..l
    int grid = 0;                      ///< 0: default_grid_size(l)
    int bins = 100;
    std::vector<int> m_values{20, 64};
    std::filesystem::path out = "out";
    std::vector<OutputFormat> formats; ///< empty: the command's default
    std::uint64_t seed = 1;
    bool use_cache = true;
    std::optional<std::filesystem::path> cache_root;  ///< default: ArtifactCache::default_root()
    int steps = 20;                    ///< classical: T
    std::int64_t samples = 1'000'000;  ///< classical: Monte-Carlo N
    HusimiSelection husimi;

    /// Throws UsageError unless 1 <= k <= l <= 7, bins >= 1, G >= 3 and the
    /// remaining fields are in range.
    void validate() const;

    std::vector<int> members() const;
    int grid_size() const;
    bool wants(OutputFormat format) const;

    nlohmann::json to_json() const;
};

/// Defaults per command: spectrum l=5; histogram l=7 with k in {1,3,5,7};
/// husimi l=5, shift only; nr-scan l=6; classical l=5.
RunConfig default_config(std::string_view command);

struct OutputFile {
    std::string name;    ///< relative to RunConfig::out
    std::string sha256;
    std::uintmax_t bytes;
};

struct MemberDiagnostics {
    Family family;
    int k;
    double residual_max;
    double left_residual_max;
    double condition;
    std::vector<int> excluded;
};

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::string tool_version;
    std::string started_utc;
    std::string finished_utc;
    std::vector<OutputFile> files;
    std::vector<MemberDiagnostics> diagnostics;

    nlohmann::json to_json() const;
};

/// Each command writes its files plus manifest.json into config.out and
/// returns the manifest. Invalid configs throw UsageError.
RunManifest cmd_spectrum(const RunConfig& config);
RunManifest cmd_histogram(const RunConfig& config);
RunManifest cmd_husimi(const RunConfig& config);
RunManifest cmd_nr_scan(const RunConfig& config);
RunManifest cmd_classical(const RunConfig& config);

struct CriterionResult {
    int id;
    std::string title;
    bool passed;
    std::string summary;
    nlohmann::json metrics;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;

    bool passed() const;
    nlohmann::json to_json() const;
    /// Canonical manifest text: no timestamps, keys sorted, fixed indentation.
    std::string manifest_text() const;
};

struct AcceptanceOptions {
    std::ostream* progress = nullptr;
    /// Runs between the two passes that criterion 11 compares.
    std::function<void(ArtifactCache&)> between_passes;
};

/// One pass over criteria 1-10.
AcceptanceReport run_acceptance_pass(ArtifactCache& cache, std::ostream* progress = nullptr);

/// Two consecutive passes; criterion 11 compares their manifests byte for byte.
AcceptanceReport run_acceptance(ArtifactCache& cache, const AcceptanceOptions& options = {});

/// Runs the suite and writes acceptance.json into config.out.
AcceptanceReport cmd_acceptance(const RunConfig& config, std::ostream* progress = nullptr);

/// "[PASS] C<n> title: summary"
std::string format_criterion_line(const CriterionResult& result);

} // namespace tribaker
