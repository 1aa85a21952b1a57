#include "tribaker/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tribaker/errors.hpp"

namespace tribaker {

PhaseGrid::PhaseGrid(int size, double fill) : size_(size) {
    if (size < 1) throw UsageError("PhaseGrid: size must be >= 1");
    values_.assign(static_cast<std::size_t>(size) * size, fill);
}

PhaseGrid::PhaseGrid(int size, std::vector<double> values) : size_(size), values_(std::move(values)) {
    if (size < 1 || values_.size() != static_cast<std::size_t>(size) * size)
        throw UsageError("PhaseGrid: value count does not match size^2");
}

double PhaseGrid::max() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

double PhaseGrid::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::size_t PhaseGrid::count_nonzero() const {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return v != 0.0; }));
}

PhaseGrid PhaseGrid::transposed() const {
    PhaseGrid out(size_);
    for (int a = 0; a < size_; ++a)
        for (int b = 0; b < size_; ++b) out(b, a) = (*this)(a, b);
    return out;
}

std::string phase_grid_csv(const PhaseGrid& grid) {
    std::ostringstream os;
    os << std::setprecision(17) << "q,p,value\n";
    for (int a = 0; a < grid.size(); ++a)
        for (int b = 0; b < grid.size(); ++b)
            os << grid.q_center(a) << ',' << grid.p_center(b) << ',' << grid(a, b) << '\n';
    return os.str();
}

std::string phase_grid_pgm(const PhaseGrid& grid, const std::string& comment) {
    const int g = grid.size();
    const double peak = grid.max();
    std::ostringstream header;
    header << std::setprecision(17) << "P5\n"
           << "# row 0 = highest p, column 0 = lowest q; sample = value / max * 65535\n"
           << "# max " << peak << '\n';
    if (!comment.empty()) header << "# " << comment << '\n';
    header << g << ' ' << g << "\n65535\n";

    std::string out = header.str();
    out.reserve(out.size() + static_cast<std::size_t>(g) * g * 2);
    for (int row = 0; row < g; ++row) {
        const int b = g - 1 - row;
        for (int a = 0; a < g; ++a) {
            const double v = peak > 0.0 ? grid(a, b) / peak : 0.0;
            const auto s = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
            out.push_back(static_cast<char>((s >> 8) & 0xff));
            out.push_back(static_cast<char>(s & 0xff));
        }
    }
    return out;
}

} // namespace tribaker
