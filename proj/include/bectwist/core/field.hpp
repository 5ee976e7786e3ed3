#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include <fftw3.h>

#include "bectwist/core/grid.hpp"

namespace bectwist {

using complex = std::complex<double>;

/// Allocator handing out FFTW-aligned storage so every buffer matches the
/// alignment the shared plans were created with.
template <class T> struct FftwAllocator {
    using value_type = T;
    FftwAllocator() noexcept = default;
    template <class U> FftwAllocator(const FftwAllocator<U> &) noexcept {}

    T *allocate(std::size_t n) {
        if (n == 0)
            return nullptr;
        void *p = fftw_malloc(n * sizeof(T));
        if (p == nullptr)
            throw std::bad_alloc();
        return static_cast<T *>(p);
    }
    void deallocate(T *p, std::size_t) noexcept { fftw_free(p); }

    template <class U> bool operator==(const FftwAllocator<U> &) const noexcept { return true; }
};

using ComplexVector = std::vector<complex, FftwAllocator<complex>>;

/// Complex amplitude per grid point, in m^(-3/2).
class ComplexField {
  public:
    ComplexField() = default;
    explicit ComplexField(GridPtr grid)
        : grid_(std::move(grid)), values_(grid_->size(), complex{0.0, 0.0}) {}

    [[nodiscard]] const GridPtr &grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<complex> values() noexcept { return values_; }
    [[nodiscard]] std::span<const complex> values() const noexcept { return values_; }
    complex &operator[](std::size_t i) noexcept { return values_[i]; }
    const complex &operator[](std::size_t i) const noexcept { return values_[i]; }
    [[nodiscard]] complex *data() noexcept { return values_.data(); }
    [[nodiscard]] const complex *data() const noexcept { return values_.data(); }

    /// sum_i |psi_i|^2 w_i
    [[nodiscard]] double norm() const {
        const auto &w = grid_->weights();
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i)
            s += std::norm(values_[i]) * w[i];
        return s;
    }

    void scale(double f) {
        for (auto &v : values_)
            v *= f;
    }

  private:
    GridPtr grid_;
    ComplexVector values_;
};

/// sum_i conj(a_i) b_i w_i
inline complex overlap(const ComplexField &a, const ComplexField &b) {
    const auto &w = a.grid()->weights();
    complex s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i)
        s += std::conj(a[i]) * b[i] * w[i];
    return s;
}

/// The two hyperfine components of one trajectory.
struct FieldPair {
    ComplexField a;
    ComplexField b;
    double time = 0.0;

    FieldPair() = default;
    explicit FieldPair(const GridPtr &grid) : a(grid), b(grid) {}
    FieldPair(ComplexField psi_a, ComplexField psi_b, double t = 0.0)
        : a(std::move(psi_a)), b(std::move(psi_b)), time(t) {
        if (a.grid() != b.grid())
            throw ConfigError("FieldPair components must share one grid");
    }

    [[nodiscard]] const GridPtr &grid() const noexcept { return a.grid(); }
    [[nodiscard]] double total_norm() const { return a.norm() + b.norm(); }
};

} // namespace bectwist
