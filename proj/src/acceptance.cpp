#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>

#include "parallel.hpp"
#include "tribaker/harness.hpp"
#include "tribaker/phasespace.hpp"
#include "tribaker/version.hpp"

namespace tribaker {

using nlohmann::json;

namespace {

constexpr std::uint64_t kAcceptanceSeed = 20231117;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::string sci(double v, int digits = 3) {
    std::ostringstream os;
    os << std::setprecision(digits) << std::scientific << v;
    return os.str();
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os << std::setprecision(digits) << std::fixed << v;
    return os.str();
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int ipow3(int n) { return QutritRegister::make(n).dim; }

// Spectra shared by several criteria within one pass.
class SpectrumStore {
public:
    explicit SpectrumStore(ArtifactCache& cache) : cache_(cache) {}

    std::shared_ptr<const ResonanceSet> get(const OpeningSpec& spec, bool vectors = true) {
        const auto key = std::make_tuple(static_cast<int>(spec.family), spec.k, spec.l, vectors);
        {
            std::lock_guard lock(mutex_);
            if (auto it = store_.find(key); it != store_.end()) return it->second;
        }
        auto set = std::make_shared<const ResonanceSet>(cache_.spectrum(spec, vectors));
        std::lock_guard lock(mutex_);
        return store_.emplace(key, std::move(set)).first->second;
    }

    void prefetch(const std::vector<OpeningSpec>& specs) {
        detail::parallel_for(specs.size(), [&](std::size_t i) { get(specs[i]); });
    }

    ArtifactCache& cache() { return cache_; }

private:
    ArtifactCache& cache_;
    std::mutex mutex_;
    std::map<std::tuple<int, int, int, bool>, std::shared_ptr<const ResonanceSet>> store_;
};

std::vector<OpeningSpec> all_members(int l) {
    std::vector<OpeningSpec> out;
    for (Family f : {Family::Shift, Family::Intersection})
        for (int k = 1; k <= l; ++k) out.push_back(OpeningSpec::make(f, k, l));
    return out;
}

void say(std::ostream* progress, const std::string& msg) {
    if (progress) *progress << "  .. " << msg << std::endl;
}

CriterionResult unitarity(std::ostream* progress) {
    say(progress, "C1 unitarity l=1..6");
    json per_l = json::array();
    double worst = 0.0;
    for (int l = 1; l <= 6; ++l) {
        const double g = antisymmetric_fourier(ipow3(l)).unitarity_defect();
        const double mix = baker_mixed(l).unitarity_defect();
        const double pos = baker_position(l).unitarity_defect();
        worst = std::max({worst, g, mix, pos});
        per_l.push_back({{"l", l}, {"G_D", g}, {"B_mix", mix}, {"B_pos", pos}});
    }
    const double tol = 1e-11;
    return {1, "Unitarity of G_D, B_mix, B_pos at l=1..6", worst <= tol,
            "max |B^dag B - I| = " + sci(worst) + " (tol " + sci(tol, 0) + ")",
            {{"max_defect", worst}, {"tolerance", tol}, {"per_l", per_l}}};
}

CriterionResult classical_exactness(std::ostream* progress) {
    say(progress, "C2 exact vs Monte-Carlo areas, l=5, T=15, N=1e6");
    constexpr int l = 5, steps = 15, tail = 5;
    constexpr std::int64_t samples = 1'000'000;
    const double ln32 = std::log(1.5);
    double worst_z = 0.0, worst_gamma = 0.0;
    json members = json::array();
    for (const auto& spec : all_members(l)) {
        const auto exact = allowed_area_sequence(spec, steps);
        const auto mc = monte_carlo_area(spec, steps, samples, kAcceptanceSeed);
        double max_z = 0.0;
        for (int t = 0; t < steps; ++t) {
            const double a = exact.areas[t];
            const double sigma = std::sqrt(a * (1.0 - a) / static_cast<double>(samples));
            max_z = std::max(max_z, std::abs(mc.areas[t] - a) / sigma);
        }
        const double gamma = escape_rate(exact, tail);
        worst_z = std::max(worst_z, max_z);
        worst_gamma = std::max(worst_gamma, std::abs(gamma - ln32));
        members.push_back({{"family", to_string(spec.family)}, {"k", spec.k}, {"max_z", max_z}, {"gamma", gamma}});
    }
    const bool ok = worst_z <= 4.0 && worst_gamma <= 1e-12;
    return {2, "Classical areas: exact vs Monte-Carlo, escape rate ln(3/2)", ok,
            "max |z| = " + fixed(worst_z) + " (tol 4), max |gamma - ln 3/2| = " + sci(worst_gamma) + " (tol 1e-12)",
            {{"steps", steps}, {"samples", samples}, {"seed", kAcceptanceSeed}, {"tail", tail},
             {"max_z", worst_z}, {"max_gamma_error", worst_gamma}, {"members", members}}};
}

CriterionResult intersection_first_step(std::ostream* progress) {
    say(progress, "C3 intersection first-step law");
    bool ok = true;
    json members = json::array();
    for (int k = 1; k <= 5; ++k) {
        const auto seq = allowed_area_sequence(OpeningSpec::make(Family::Intersection, k, 5), 1);
        const double expected = std::pow(2.0 / 3.0, 2 * k);
        const bool hit = seq.open_trits[0] == 2 * k && seq.areas[0] == expected;
        ok = ok && hit;
        members.push_back({{"k", k}, {"open_trits", seq.open_trits[0]}, {"A1", seq.areas[0]}, {"expected", expected}});
    }
    return {3, "Intersection first step A_1 = (2/3)^(2k), k=1..5", ok,
            ok ? "A_1 = (2/3)^(2k) exactly for k=1..5" : "A_1 differs from (2/3)^(2k)", {{"members", members}}};
}

double multiset_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    std::vector<char> used(b.size(), 0);
    double worst = 0.0;
    for (const auto& z : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < b.size(); ++i)
            if (!used[i] && std::abs(z - b[i]) < best) {
                best = std::abs(z - b[i]);
                arg = i;
            }
        used[arg] = 1;
        worst = std::max(worst, best);
    }
    return worst;
}

CriterionResult family_coincidence(SpectrumStore& store, std::ostream* progress) {
    say(progress, "C4 k=1 coincidence");
    double op_diff = 0.0;
    for (int l = 1; l <= 6; ++l) {
        const auto s = store.cache().open_map(OpeningSpec::make(Family::Shift, 1, l));
        const auto i = store.cache().open_map(OpeningSpec::make(Family::Intersection, 1, l));
        op_diff = std::max(op_diff, (s.matrix() - i.matrix()).cwiseAbs().maxCoeff());
    }
    const auto ss = store.get(OpeningSpec::make(Family::Shift, 1, 5));
    const auto si = store.get(OpeningSpec::make(Family::Intersection, 1, 5));
    const double spec_diff = multiset_distance(ss->eigenvalues, si->eigenvalues);
    const bool ok = op_diff <= 1e-14 && spec_diff <= 1e-9;
    return {4, "Shift and intersection coincide at k=1", ok,
            "operator max diff " + sci(op_diff) + " (tol 1e-14, l=1..6), spectrum multiset diff " + sci(spec_diff) +
                " (tol 1e-9, l=5)",
            {{"operator_max_diff", op_diff}, {"spectrum_multiset_diff", spec_diff}}};
}

CriterionResult containment_and_traces(SpectrumStore& store, std::ostream* progress) {
    say(progress, "C5 spectral containment and traces, l=5");
    constexpr int l = 5;
    const double dim = ipow3(l);
    double radius = 0.0, tr1 = 0.0, tr2 = 0.0;
    json members = json::array();
    for (const auto& spec : all_members(l)) {
        const auto set = store.get(spec);
        const auto op = store.cache().open_map(spec);
        const auto& b = op.matrix();
        Complex s1{}, s2{};
        for (const auto& z : set->eigenvalues) {
            s1 += z;
            s2 += z * z;
        }
        const Complex t1 = b.trace();
        const Complex t2 = (b.array() * b.transpose().array()).sum();
        const double e1 = std::abs(s1 - t1), e2 = std::abs(s2 - t2);
        radius = std::max(radius, set->spectral_radius());
        tr1 = std::max(tr1, e1);
        tr2 = std::max(tr2, e2);
        members.push_back({{"family", to_string(spec.family)}, {"k", spec.k},
                           {"spectral_radius", set->spectral_radius()}, {"trace_error", e1}, {"trace2_error", e2}});
    }
    const bool ok = radius <= 1.0 + 1e-10 && tr1 <= 1e-8 * dim && tr2 <= 1e-8 * dim;
    return {5, "Spectral containment and trace identities at l=5", ok,
            "max |lambda| = " + fixed(radius, 12) + ", trace errors " + sci(tr1) + ", " + sci(tr2) + " (tol " +
                sci(1e-8 * dim) + ")",
            {{"max_modulus", radius}, {"trace_error", tr1}, {"trace2_error", tr2}, {"members", members}}};
}

CriterionResult eigenoperator_algebra(SpectrumStore& store, std::ostream* progress) {
    say(progress, "C6 eigenoperator algebra, l=4");
    constexpr int l = 4;
    const int dim = ipow3(l);
    bool ok = true;
    double worst_h = 0.0, worst_q = 0.0;
    int identity_checked = 0, identity_skipped = 0;
    json members = json::array();
    for (const auto& spec : all_members(l)) {
        const auto set = store.get(spec);
        const auto excluded = set->excluded_indices();
        const int q_upto = excluded.empty() ? dim : excluded.front() - 1;
        double err_h = 0.0, err_q = 0.0;
        Complex q_trace{};
        for (int j = 1; j <= dim; ++j) {
            const bool usable = set->overlaps[j - 1] >= kNearDefectiveOverlap;
            if (usable) {
                const Complex tr = resonance_operator(*set, j).op.matrix().trace();
                err_h = std::max(err_h, std::abs(tr - 1.0));
            }
            if (j <= q_upto) {
                q_trace = cumulative_projector(*set, j).op.matrix().trace();
                err_q = std::max(err_q, std::abs(q_trace - static_cast<double>(j)) / j);
            }
        }
        worst_h = std::max(worst_h, err_h);
        worst_q = std::max(worst_q, err_q);
        bool member_ok = err_h <= 1e-8 && err_q <= 1e-6;

        json m = {{"family", to_string(spec.family)}, {"k", spec.k}, {"trace_h_error", err_h},
                  {"trace_Q_relative_error", err_q}, {"excluded", excluded.size()}, {"condition", number(set->condition)}};
        if (excluded.empty()) {
            const double min_overlap = *std::min_element(set->overlaps.begin(), set->overlaps.end());
            const double kappa = 1.0 / min_overlap;
            const double tol = dim * kEps * kappa * kappa;
            const Eigen::MatrixXcd qd = cumulative_projector(*set, dim).op.matrix();
            const double err = (qd - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
            m["QD_identity_error"] = err;
            m["QD_tolerance"] = tol;
            member_ok = member_ok && err <= tol;
            ++identity_checked;
        } else {
            m["QD_identity_error"] = nullptr;
            m["QD_note"] = "defective spectrum: Q_D = I does not hold";
            ++identity_skipped;
        }
        ok = ok && member_ok;
        members.push_back(m);
    }
    return {6, "Eigenoperator traces and Q_D = I at l=4", ok,
            "max |tr h_j - 1| = " + sci(worst_h) + ", max |tr Q_j - j|/j = " + sci(worst_q) + "; Q_D = I checked on " +
                std::to_string(identity_checked) + " diagonalizable members, " + std::to_string(identity_skipped) +
                " defective members excluded",
            {{"max_trace_h_error", worst_h}, {"max_trace_Q_relative_error", worst_q}, {"members", members}}};
}

CriterionResult nr_calibration(std::ostream* progress) {
    say(progress, "C7 norm-ratio calibration, l=5");
    const int dim = ipow3(5);
    const CoherentFrame frame(dim, dim);
    const auto self = norm_ratio(frame.reference(), frame);
    const Eigen::VectorXcd c = coherent_state(frame.center(dim / 2), frame.center(dim / 2), dim);
    const ComplexOperator proj(c * c.adjoint(), OperatorTag::Projector);
    const auto via_op = norm_ratio(husimi(proj, frame), frame);
    const double uniform = self.uniform_nr;
    const double rel = std::abs(uniform - dim / 2.0) / (dim / 2.0);
    const bool ok = self.nr == 1.0 && std::abs(via_op.nr - 1.0) <= 1e-9 && rel <= 0.02;
    return {7, "Norm-ratio calibration (coherent = 1, uniform = D/2) at l=5", ok,
            "nr(coherent) = " + fixed(self.nr, 15) + ", nr(|c><c|) = " + fixed(via_op.nr, 12) +
                ", nr(uniform) = " + fixed(uniform, 4) + " vs D/2 = " + fixed(dim / 2.0, 1) + " (rel " + sci(rel) + ")",
            {{"nr_coherent", self.nr}, {"nr_coherent_projector", via_op.nr}, {"nr_uniform", uniform},
             {"relative_error", rel}, {"grid", frame.grid_size()}}};
}

CriterionResult spectral_contraction(SpectrumStore& store, std::ostream* progress) {
    say(progress, "C8 spectral contraction (l=5 counts, l=7 histogram)");
    auto count_above = [](const ResonanceSet& s) {
        return static_cast<int>(std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(),
                                              [](const Complex& z) { return std::abs(z) > 0.5; }));
    };
    const int n1 = count_above(*store.get(OpeningSpec::make(Family::Intersection, 1, 5)));
    const int n5 = count_above(*store.get(OpeningSpec::make(Family::Intersection, 5, 5)));
    say(progress, "C8 l=7 intersection k=7 eigenvalues (D=2187)");
    const auto big = store.cache().spectrum(OpeningSpec::make(Family::Intersection, 7, 7), false);
    const auto hist = modulus_histogram(big, 100);
    const int mode = hist.mode();
    const bool ok = 10 * n5 < n1 && mode < 10;
    return {8, "Spectral contraction of the intersection family", ok,
            "#|lambda|>0.5 at l=5: k=5 " + std::to_string(n5) + " vs k=1 " + std::to_string(n1) +
                "; l=7 k=7 histogram mode bin " + std::to_string(mode) + " [" + fixed(hist.edges[mode]) + ", " +
                fixed(hist.edges[mode + 1]) + ")",
            {{"count_k1", n1}, {"count_k5", n5}, {"l7_mode_bin", mode}, {"l7_mode_count", hist.counts[mode]},
             {"l7_total", hist.total()}}};
}

struct ScanResult {
    int l;
    int grid;
    double threshold;
    std::map<Family, std::vector<NrScanMember>> members;
};

ScanResult scan(SpectrumStore& store, int l, int grid, std::ostream* progress) {
    say(progress, "nr scan l=" + std::to_string(l) + " G=" + std::to_string(grid) + ": I_rep");
    const int dim = ipow3(l);
    const CoherentFrame frame(dim, grid);
    ScanResult out{l, grid, repeller_operator(l, frame).nr.nr, {}};
    const auto specs = all_members(l);
    std::vector<NrScanMember> rows(specs.size());
    detail::parallel_for(specs.size(), [&](std::size_t i) {
        say(progress, "nr scan l=" + std::to_string(l) + " G=" + std::to_string(grid) + ": " +
                          std::string(to_string(specs[i].family)) + " k=" + std::to_string(specs[i].k));
        rows[i] = nr_scan_member(specs[i].k, *store.get(specs[i]), {20, 64}, frame);
    });
    for (std::size_t i = 0; i < specs.size(); ++i) out.members[specs[i].family].push_back(rows[i]);
    return out;
}

CriterionResult delocalization(const std::vector<ScanResult>& scans) {
    bool ok = true;
    std::string summary;
    json cases = json::array();
    for (const auto& s : scans) {
        const auto& shift = s.members.at(Family::Shift);
        const auto& inter = s.members.at(Family::Intersection);
        const double thr = s.threshold;
        std::vector<double> ms, mi;
        for (const auto& m : shift) ms.push_back(m.mean_nr.at(20));
        for (const auto& m : inter) mi.push_back(m.mean_nr.at(20));
        int crossing = 0;
        for (std::size_t i = 0; i < ms.size(); ++i)
            if (ms[i] > thr) {
                crossing = static_cast<int>(i) + 1;
                break;
            }
        bool above_after = crossing > 0;
        for (std::size_t i = crossing > 0 ? crossing - 1 : ms.size(); i < ms.size(); ++i)
            above_after = above_after && ms[i] > thr;
        const int half = (s.l + 1) / 2;
        const bool ends = ms.back() > thr && thr > ms.front();
        const bool window = crossing >= half - 1 && crossing <= half + 1;
        const bool below = std::all_of(mi.begin(), mi.end(), [thr](double v) { return v < thr; });
        const bool case_ok = ends && window && below;
        ok = ok && case_ok;

        std::ostringstream line;
        line << "l=" << s.l << " G=" << s.grid << ": nr(I_rep)=" << fixed(thr) << ", shift <nr>20 = [";
        for (std::size_t i = 0; i < ms.size(); ++i) line << (i ? " " : "") << fixed(ms[i]);
        line << "], crossing k=" << crossing << " (allowed " << half - 1 << ".." << half + 1
             << "), intersection max " << fixed(*std::max_element(mi.begin(), mi.end()));
        summary += (summary.empty() ? "" : "; ") + line.str();
        cases.push_back({{"l", s.l}, {"grid", s.grid}, {"threshold", thr}, {"shift_mean20", ms},
                         {"intersection_mean20", mi}, {"crossing_k", crossing},
                         {"all_above_from_crossing", above_after}, {"passed", case_ok}});
    }
    return {9, "Delocalization transition of the shift family", ok, summary, {{"cases", cases}}};
}

CriterionResult q_saturation(const ScanResult& s) {
    const auto& member = s.members.at(Family::Shift).back();
    const double thr = s.threshold;
    const int lo = 1 << s.l, hi = std::min<int>(2 << s.l, static_cast<int>(member.ratios.nr_q.size()));
    std::vector<double> plateau;
    json ratios = json::array();
    for (int j = lo; j <= hi; ++j) {
        const double r = member.ratios.nr_q[j - 1] / thr;
        ratios.push_back(number(r));
        if (!std::isnan(r)) plateau.push_back(r);
    }
    if (plateau.empty())
        return {10, "Q_j saturation for shift k=l at l=5", false, "nr(Q_j) undefined on the plateau window",
                {{"j_from", lo}, {"j_to", hi}}};
    std::vector<double> sorted = plateau;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double at_lo = member.ratios.nr_q[lo - 1] / thr;
    const bool ok = median >= 1.5 && median <= 2.5;
    return {10, "Q_j saturation for shift k=l at l=5", ok,
            "median nr(Q_j)/nr(I_rep) over j=" + std::to_string(lo) + ".." + std::to_string(hi) + " = " +
                fixed(median, 3) + " (required within [1.5, 2.5]); range [" + fixed(sorted.front(), 3) + ", " +
                fixed(sorted.back(), 3) + "], j=" + std::to_string(lo) + ": " + fixed(at_lo, 3),
            {{"j_from", lo}, {"j_to", hi}, {"ratio_median", median}, {"ratio_min", sorted.front()},
             {"ratio_max", sorted.back()}, {"ratio_at_j_from", number(at_lo)}, {"ratios", ratios},
             {"threshold", thr}, {"defined", n}}};
}

} // namespace

bool AcceptanceReport::passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
}

json AcceptanceReport::to_json() const {
    json list = json::array();
    for (const auto& c : criteria)
        list.push_back({{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"summary", c.summary},
                        {"metrics", c.metrics}});
    return {{"suite", "tribaker acceptance"}, {"tool_version", kToolVersion}, {"passed", passed()}, {"criteria", list}};
}

std::string AcceptanceReport::manifest_text() const { return to_json().dump(2) + "\n"; }

std::string format_criterion_line(const CriterionResult& r) {
    return std::string(r.passed ? "[PASS]" : "[FAIL]") + " C" + std::to_string(r.id) + " " + r.title + ": " + r.summary;
}

AcceptanceReport run_acceptance_pass(ArtifactCache& cache, std::ostream* progress) {
    SpectrumStore store(cache);
    AcceptanceReport report;
    report.criteria.push_back(unitarity(progress));
    report.criteria.push_back(classical_exactness(progress));
    report.criteria.push_back(intersection_first_step(progress));

    say(progress, "decomposing l=4 and l=5 members");
    auto specs = all_members(5);
    const auto l4 = all_members(4);
    specs.insert(specs.end(), l4.begin(), l4.end());
    store.prefetch(specs);
    report.criteria.push_back(family_coincidence(store, progress));
    report.criteria.push_back(containment_and_traces(store, progress));
    report.criteria.push_back(eigenoperator_algebra(store, progress));
    report.criteria.push_back(nr_calibration(progress));
    report.criteria.push_back(spectral_contraction(store, progress));

    say(progress, "decomposing l=6 members");
    store.prefetch(all_members(6));
    std::vector<ScanResult> scans;
    scans.push_back(scan(store, 5, 243, progress));
    scans.push_back(scan(store, 5, 486, progress));
    scans.push_back(scan(store, 6, 243, progress));
    report.criteria.push_back(delocalization(scans));
    report.criteria.push_back(q_saturation(scans.front()));
    return report;
}

AcceptanceReport run_acceptance(ArtifactCache& cache, const AcceptanceOptions& options) {
    if (options.progress) *options.progress << "acceptance pass 1" << std::endl;
    const AcceptanceReport first = run_acceptance_pass(cache, options.progress);
    if (options.between_passes) options.between_passes(cache);
    if (options.progress) *options.progress << "acceptance pass 2" << std::endl;
    AcceptanceReport second = run_acceptance_pass(cache, options.progress);

    const std::string a = first.manifest_text();
    const std::string b = second.manifest_text();
    std::size_t diff = 0;
    while (diff < a.size() && diff < b.size() && a[diff] == b[diff]) ++diff;
    const bool same = a == b;
    second.criteria.push_back(
        {11, "Determinism of consecutive acceptance runs", same,
         same ? "two consecutive passes produced byte-identical manifests (" + std::to_string(a.size()) + " bytes)"
              : "manifests differ at byte " + std::to_string(diff),
         {{"bytes", a.size()}, {"identical", same}}});
    return second;
}

AcceptanceReport cmd_acceptance(const RunConfig& config, std::ostream* progress) {
    ArtifactCache cache(config.cache_root.value_or(ArtifactCache::default_root()), config.use_cache);
    AcceptanceOptions options;
    options.progress = progress;
    AcceptanceReport report = run_acceptance(cache, options);
    std::filesystem::create_directories(config.out);
    std::ofstream out(config.out / "acceptance.json", std::ios::trunc);
    out << report.manifest_text();
    if (!out) throw std::runtime_error("cannot write acceptance.json");
    return report;
}

} // namespace tribaker
