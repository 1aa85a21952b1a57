#pragma once

#include <string>
#include <vector>

namespace tribaker {

/// Real G x G sampling of a phase-space function on the unit torus.
///
/// Cell (a, b) is centred at q = (a + 1/2) / G, p = (b + 1/2) / G.
/// Storage is q-major: values[a * G + b].
class PhaseGrid {
public:
    PhaseGrid() = default;
    explicit PhaseGrid(int size, double fill = 0.0);
    PhaseGrid(int size, std::vector<double> values);

    int size() const noexcept { return size_; }
    double q_center(int a) const { return (a + 0.5) / size_; }
    double p_center(int b) const { return (b + 0.5) / size_; }

    double& operator()(int a, int b) { return values_[static_cast<std::size_t>(a) * size_ + b]; }
    double operator()(int a, int b) const { return values_[static_cast<std::size_t>(a) * size_ + b]; }

    const std::vector<double>& values() const noexcept { return values_; }

    double max() const;
    double sum() const;
    std::size_t count_nonzero() const;

    /// Swaps the roles of q and p.
    PhaseGrid transposed() const;

private:
    int size_ = 0;
    std::vector<double> values_;
};

/// "q,p,value" rows, q-major.
std::string phase_grid_csv(const PhaseGrid& grid);

/// 16-bit binary PGM (P5, big-endian samples as the format requires).
/// Row 0 of the image is the highest p; column 0 is the lowest q. Samples are
/// value / max * 65535, and the max is recorded in a header comment.
std::string phase_grid_pgm(const PhaseGrid& grid, const std::string& comment = {});

} // namespace tribaker
