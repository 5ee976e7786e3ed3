#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace bectwist {

/// Random stream of one trajectory, a pure function of (master_seed, index).
class TrajectoryRng {
  public:
    TrajectoryRng(std::uint64_t master_seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    double normal(double stddev = 1.0) { return stddev * unit_(engine_); }

    /// Complex Gaussian with <|z|^2> = variance (variance/2 per quadrature).
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal(s);
        const double im = normal(s);
        return {re, im};
    }

    std::mt19937_64 &engine() noexcept { return engine_; }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> unit_{0.0, 1.0};
};

} // namespace bectwist
