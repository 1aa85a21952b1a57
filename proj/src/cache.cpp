#include "tribaker/cache.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "tribaker/checksum.hpp"
#include "tribaker/errors.hpp"
#include "tribaker/version.hpp"

namespace tribaker {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSpectrumMagic = "TBAKERSP";
constexpr std::uint32_t kSpectrumFormatVersion = 1;
constexpr std::size_t kSpectrumHeaderSize = 56;

std::string member_stem(const OpeningSpec& spec) {
    return std::string(to_string(spec.family)) + "_l" + std::to_string(spec.l) + "_k" + std::to_string(spec.k);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Write to a sibling temporary and rename so readers never see partial files.
template <typename Writer>
void write_atomically(const fs::path& path, Writer&& writer) {
    fs::create_directories(path.parent_path());
    std::ostringstream tid;
    tid << std::this_thread::get_id();
    const fs::path tmp = path.string() + ".tmp" + tid.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        writer(out);
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace

void write_spectrum(std::ostream& out, const OpeningSpec& spec, const ResonanceSet& set) {
    const int n = set.dim();
    const bool vectors = set.has_vectors();
    std::string payload;
    for (const auto& z : set.eigenvalues) detail::put_complex(payload, z);
    detail::put_f64(payload, set.condition);
    detail::put_f64(payload, set.residual_max);
    detail::put_f64(payload, set.left_residual_max);
    if (vectors) {
        for (double o : set.overlaps) detail::put_f64(payload, o);
        for (Eigen::Index i = 0; i < set.right.size(); ++i) detail::put_complex(payload, set.right.data()[i]);
        for (Eigen::Index i = 0; i < set.left.size(); ++i) detail::put_complex(payload, set.left.data()[i]);
    }

    std::string header(kSpectrumMagic);
    detail::put_u32(header, kSpectrumFormatVersion);
    detail::put_u32(header, static_cast<std::uint32_t>(n));
    header.push_back(static_cast<char>(spec.family));
    header.push_back(static_cast<char>(spec.l));
    header.push_back(static_cast<char>(spec.k));
    header.push_back(static_cast<char>(vectors ? 1 : 0));
    header.append(4, '\0');
    const auto digest = sha256(payload);
    header.append(reinterpret_cast<const char*>(digest.data()), digest.size());

    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError("write_spectrum: stream write failed");
}

ResonanceSet read_spectrum(std::istream& in, const OpeningSpec& expected) {
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    detail::Reader rd(bytes);
    if (rd.take(kSpectrumMagic.size()) != kSpectrumMagic) throw FormatError("read_spectrum: bad magic");
    if (rd.u32() != kSpectrumFormatVersion) throw FormatError("read_spectrum: unsupported format version");
    const std::uint32_t n = rd.u32();
    const auto family = rd.u8();
    const auto l = rd.u8();
    const auto k = rd.u8();
    const bool vectors = rd.u8() != 0;
    rd.take(4);
    const auto stored = rd.take(32);
    if (family != static_cast<std::uint8_t>(expected.family) || l != expected.l || k != expected.k)
        throw FormatError("read_spectrum: entry belongs to a different member");

    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const std::size_t expected_size = n * 16 + 24 + (vectors ? n * 8 + 2 * nn * 16 : 0);
    if (rd.remaining() != expected_size) throw FormatError("read_spectrum: payload size does not match dimension");
    const auto digest = sha256(std::string_view(bytes).substr(kSpectrumHeaderSize));
    if (!std::equal(digest.begin(), digest.end(), reinterpret_cast<const std::uint8_t*>(stored.data())))
        throw FormatError("read_spectrum: checksum mismatch");

    ResonanceSet set;
    set.eigenvalues.resize(n);
    for (auto& z : set.eigenvalues) z = rd.complex();
    set.condition = rd.f64();
    set.residual_max = rd.f64();
    set.left_residual_max = rd.f64();
    if (vectors) {
        set.overlaps.resize(n);
        for (auto& o : set.overlaps) o = rd.f64();
        set.right.resize(n, n);
        set.left.resize(n, n);
        for (std::size_t i = 0; i < nn; ++i) set.right.data()[i] = rd.complex();
        for (std::size_t i = 0; i < nn; ++i) set.left.data()[i] = rd.complex();
    }
    return set;
}

ArtifactCache::ArtifactCache(fs::path root, bool enabled)
    : dir_(std::move(root) / (std::string("tribaker-") + kToolVersion + "-schema" + std::to_string(kCacheSchema))),
      enabled_(enabled) {}

fs::path ArtifactCache::default_root() {
    if (const char* env = std::getenv("TRIBAKER_CACHE_DIR"); env && *env) return env;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "tribaker";
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "tribaker";
    return ".tribaker-cache";
}

fs::path ArtifactCache::operator_path(const OpeningSpec& spec) const {
    return dir_ / ("op_" + member_stem(spec) + ".tbop");
}

fs::path ArtifactCache::spectrum_path(const OpeningSpec& spec, bool vectors) const {
    return dir_ / ((vectors ? "spec_" : "eig_") + member_stem(spec) + ".tbsp");
}

ArtifactCache::Stats ArtifactCache::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

void ArtifactCache::count(int Stats::*field) {
    std::lock_guard lock(mutex_);
    ++(stats_.*field);
}

ComplexOperator ArtifactCache::open_map(const OpeningSpec& spec) {
    if (!enabled_) return tribaker::open_map(spec);
    const fs::path path = operator_path(spec);
    if (fs::exists(path)) {
        try {
            std::istringstream in(slurp(path));
            ComplexOperator op = read_operator(in);
            if (op.dim() == QutritRegister::make(spec.l).dim && op.tag() == OperatorTag::OpenMap) {
                count(&Stats::hits);
                return op;
            }
        } catch (const FormatError&) {
        }
        count(&Stats::invalid);
    } else {
        count(&Stats::misses);
    }
    ComplexOperator op = tribaker::open_map(spec);
    write_atomically(path, [&](std::ostream& out) { write_operator(out, op); });
    return op;
}

ResonanceSet ArtifactCache::spectrum(const OpeningSpec& spec, bool vectors) {
    const EigenOptions options{DefectivePolicy::Report, vectors};
    if (!enabled_) return eigendecompose(tribaker::open_map(spec), options);
    const fs::path path = spectrum_path(spec, vectors);
    if (fs::exists(path)) {
        try {
            std::istringstream in(slurp(path));
            ResonanceSet set = read_spectrum(in, spec);
            if (set.dim() == QutritRegister::make(spec.l).dim && set.has_vectors() == vectors) {
                count(&Stats::hits);
                return set;
            }
        } catch (const FormatError&) {
        }
        count(&Stats::invalid);
    } else {
        count(&Stats::misses);
    }
    ResonanceSet set = eigendecompose(open_map(spec), options);
    write_atomically(path, [&](std::ostream& out) { write_spectrum(out, spec, set); });
    return set;
}

} // namespace tribaker
