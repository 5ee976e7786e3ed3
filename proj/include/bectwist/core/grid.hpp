#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "bectwist/core/constants.hpp"
#include "bectwist/core/errors.hpp"

namespace bectwist {

enum class Geometry { Cartesian3D, SphericalRadial1D };

inline std::string_view to_string(Geometry g) {
    return g == Geometry::Cartesian3D ? "cartesian_3d" : "spherical_radial_1d";
}

inline Geometry geometry_from_string(std::string_view s) {
    if (s == "cartesian_3d")
        return Geometry::Cartesian3D;
    if (s == "spherical_radial_1d")
        return Geometry::SphericalRadial1D;
    throw ConfigError("unknown geometry '" + std::string(s) + "'");
}

/**
 * Discretised spatial domain.
 *
 * Cartesian3D is a periodic box centred on the origin, row-major with
 * axis 0 slowest. Sample points sit at x_i = -L/2 + i dx and the spectral
 * wavenumbers follow the FFTW ordering (0, 1, ..., N/2-1, -N/2, ..., -1)
 * times 2 pi / L.
 *
 * SphericalRadial1D samples the half-open interval (0, R] on a staggered
 * grid r_i = (i + 1/2) dr, dr = R / N. The radial problem is solved for
 * u = r psi, which is odd about r = 0 and vanishes at r = R, so a type-II
 * sine transform diagonalises d^2/dr^2 with wavenumbers k_n = (n + 1) pi / R.
 * Each sample carries the shell weight 4 pi r_i^2 dr.
 */
class Grid {
  public:
    static constexpr std::size_t min_points = 8;
    static constexpr std::size_t max_points = 4096;

    Grid(Geometry geometry, std::vector<std::size_t> points,
         std::vector<double> lengths)
        : geometry_(geometry), points_(std::move(points)),
          lengths_(std::move(lengths)) {
        const std::size_t axes = geometry_ == Geometry::Cartesian3D ? 3 : 1;
        if (points_.size() == 1 && axes == 3)
            points_.assign(3, points_[0]);
        if (lengths_.size() == 1 && axes == 3)
            lengths_.assign(3, lengths_[0]);
        if (points_.size() != axes || lengths_.size() != axes)
            throw ConfigError("grid: expected " + std::to_string(axes) +
                              " axes for " + std::string(to_string(geometry_)));
        for (std::size_t a = 0; a < axes; ++a) {
            if (points_[a] < min_points || points_[a] > max_points)
                throw ConfigError("grid: points per axis must be in [8, 4096], got " +
                                  std::to_string(points_[a]));
            if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a]))
                throw ConfigError("grid: lengths must be positive and finite");
        }
        geometry_ == Geometry::Cartesian3D ? build_cartesian() : build_radial();
    }

    [[nodiscard]] Geometry geometry() const noexcept { return geometry_; }
    [[nodiscard]] const std::vector<std::size_t> &points() const noexcept { return points_; }
    [[nodiscard]] const std::vector<double> &lengths() const noexcept { return lengths_; }
    [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
    [[nodiscard]] std::size_t axes() const noexcept { return points_.size(); }

    /// Grid spacing along an axis.
    [[nodiscard]] double spacing(std::size_t axis) const {
        return lengths_[axis] / static_cast<double>(points_[axis]);
    }

    /// Per-point volume element (uniform for Cartesian, shell weight for radial).
    [[nodiscard]] double dv(std::size_t i) const noexcept { return weights_[i]; }
    [[nodiscard]] const std::vector<double> &weights() const noexcept { return weights_; }

    /// Uniform cell volume of a Cartesian grid; for the radial grid the
    /// per-point weights must be used instead.
    [[nodiscard]] double cell_volume() const {
        if (geometry_ != Geometry::Cartesian3D)
            throw ConfigError("cell_volume is only uniform on a Cartesian grid");
        return weights_.front();
    }

    [[nodiscard]] double total_weight() const {
        return std::accumulate(weights_.begin(), weights_.end(), 0.0);
    }

    /// Physical volume of the domain: the box, or the sphere of radius R.
    [[nodiscard]] double volume() const {
        if (geometry_ == Geometry::Cartesian3D)
            return lengths_[0] * lengths_[1] * lengths_[2];
        return 4.0 / 3.0 * constants::pi * std::pow(lengths_[0], 3);
    }

    /// Sample coordinates along one axis (radii for the radial grid).
    [[nodiscard]] const std::vector<double> &coordinates(std::size_t axis) const {
        return coords_[axis];
    }
    [[nodiscard]] const std::vector<double> &wavenumbers(std::size_t axis) const {
        return wavenumbers_[axis];
    }
    /// |k|^2 per spectral coefficient, in transform storage order.
    [[nodiscard]] const std::vector<double> &k_squared() const noexcept { return k2_; }

    /// Squared distance from the origin with per-axis scale factors s_a,
    /// i.e. sum_a s_a x_a^2. On the radial grid all scales must be equal.
    [[nodiscard]] std::vector<double>
    weighted_r2(const std::array<double, 3> &scale) const {
        std::vector<double> out(size());
        if (geometry_ == Geometry::SphericalRadial1D) {
            for (std::size_t i = 0; i < size(); ++i)
                out[i] = scale[0] * coords_[0][i] * coords_[0][i];
            return out;
        }
        const auto nx = points_[0], ny = points_[1], nz = points_[2];
        std::size_t idx = 0;
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j)
                for (std::size_t k = 0; k < nz; ++k, ++idx) {
                    const double x = coords_[0][i], y = coords_[1][j], z = coords_[2][k];
                    out[idx] = scale[0] * x * x + scale[1] * y * y + scale[2] * z * z;
                }
        return out;
    }

    /// Coordinate along `axis` of the point with flat index `i`.
    [[nodiscard]] double coordinate_of(std::size_t i, std::size_t axis) const {
        if (geometry_ == Geometry::SphericalRadial1D)
            return coords_[0][i];
        const auto ny = points_[1], nz = points_[2];
        const std::size_t idx[3] = {i / (ny * nz), (i / nz) % ny, i % nz};
        return coords_[axis][idx[axis]];
    }

  private:
    void build_cartesian() {
        coords_.resize(3);
        wavenumbers_.resize(3);
        double dv = 1.0;
        for (std::size_t a = 0; a < 3; ++a) {
            const auto n = points_[a];
            const double dx = spacing(a);
            dv *= dx;
            coords_[a].resize(n);
            wavenumbers_[a].resize(n);
            const double dk = 2.0 * constants::pi / lengths_[a];
            for (std::size_t i = 0; i < n; ++i) {
                coords_[a][i] = -0.5 * lengths_[a] + static_cast<double>(i) * dx;
                const auto si = static_cast<long long>(i);
                const auto sn = static_cast<long long>(n);
                wavenumbers_[a][i] = dk * static_cast<double>(si < sn / 2 ? si : si - sn);
            }
        }
        const std::size_t total = points_[0] * points_[1] * points_[2];
        weights_.assign(total, dv);
        k2_.resize(total);
        std::size_t idx = 0;
        for (std::size_t i = 0; i < points_[0]; ++i)
            for (std::size_t j = 0; j < points_[1]; ++j)
                for (std::size_t k = 0; k < points_[2]; ++k, ++idx) {
                    const double kx = wavenumbers_[0][i], ky = wavenumbers_[1][j],
                                 kz = wavenumbers_[2][k];
                    k2_[idx] = kx * kx + ky * ky + kz * kz;
                }
    }

    void build_radial() {
        const auto n = points_[0];
        const double dr = spacing(0);
        coords_.assign(1, std::vector<double>(n));
        wavenumbers_.assign(1, std::vector<double>(n));
        weights_.resize(n);
        k2_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (static_cast<double>(i) + 0.5) * dr;
            coords_[0][i] = r;
            weights_[i] = 4.0 * constants::pi * r * r * dr;
            const double k = static_cast<double>(i + 1) * constants::pi / lengths_[0];
            wavenumbers_[0][i] = k;
            k2_[i] = k * k;
        }
    }

    Geometry geometry_;
    std::vector<std::size_t> points_;
    std::vector<double> lengths_;
    std::vector<std::vector<double>> coords_;
    std::vector<std::vector<double>> wavenumbers_;
    std::vector<double> weights_;
    std::vector<double> k2_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(Geometry geometry, std::vector<std::size_t> points,
                         std::vector<double> lengths) {
    return std::make_shared<const Grid>(geometry, std::move(points), std::move(lengths));
}

} // namespace bectwist
