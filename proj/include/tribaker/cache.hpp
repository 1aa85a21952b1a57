// cache.hpp: on-disk cache of open-map operators and their spectra

#pragma once

#include <filesystem>
#include <mutex>
#include <string>

#include "tribaker/spectral.hpp"

namespace tribaker {

/// Bumped whenever cached bytes could change for the same key.
inline constexpr int kCacheSchema = 2;

/// Entries are keyed by (l, family, k) under a directory named after the
/// tool version and cache schema, so entries written by another version are
/// never read. Every file carries a SHA-256 of its payload; a file that fails
/// validation is recomputed and overwritten.
///
/// Safe to share between threads as long as no two threads ask for the same
/// key at once.
class ArtifactCache {
public:
    struct Stats {
        int hits = 0;
        int misses = 0;
        int invalid = 0;  ///< entries rejected by validation and rebuilt
    };

    /// A disabled cache computes everything and touches no files.
    ArtifactCache(std::filesystem::path root, bool enabled);

    /// $TRIBAKER_CACHE_DIR, else $XDG_CACHE_HOME/tribaker, else
    /// $HOME/.cache/tribaker, else ./.tribaker-cache.
    static std::filesystem::path default_root();

    bool enabled() const noexcept { return enabled_; }
    const std::filesystem::path& directory() const noexcept { return dir_; }

    ComplexOperator open_map(const OpeningSpec& spec);

    /// Spectrum decomposed with DefectivePolicy::Report.
    ResonanceSet spectrum(const OpeningSpec& spec, bool vectors = true);

    std::filesystem::path operator_path(const OpeningSpec& spec) const;
    std::filesystem::path spectrum_path(const OpeningSpec& spec, bool vectors) const;

    Stats stats() const;

private:
    void count(int Stats::*field);

    std::filesystem::path dir_;
    bool enabled_;
    mutable std::mutex mutex_;
    Stats stats_;
};

void write_spectrum(std::ostream& out, const OpeningSpec& spec, const ResonanceSet& set);

/// Throws FormatError on a bad header, checksum mismatch or key mismatch.
ResonanceSet read_spectrum(std::istream& in, const OpeningSpec& expected);

} // namespace tribaker
