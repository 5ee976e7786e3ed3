#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bectwist/core/errors.hpp"

namespace bectwist::twomode {

/// Free-evolution interval [start, end]. `swapped` marks intervals after an
/// odd number of pi pulses, where the atoms of mode 1 sit in component b.
struct ChiWindow {
    double start = 0.0;
    double end = 0.0;
    bool swapped = false;
};

/**
 * chi_ij(t) = U_ij / (2 hbar) int |u_i|^2 |u_j|^2 (rad/s) in lab-frame
 * component labels. Times are non-decreasing; a repeated time marks a pulse,
 * with the pre-pulse sample first.
 */
struct ChiTrace {
    std::vector<double> time;
    std::vector<double> chi_aa;
    std::vector<double> chi_bb;
    std::vector<double> chi_ab;
    std::vector<ChiWindow> windows;

    void push(double t, double aa, double bb, double ab) {
        time.push_back(t);
        chi_aa.push_back(aa);
        chi_bb.push_back(bb);
        chi_ab.push_back(ab);
    }

    /// Windows of the echo sequence: 2 n_bounces intervals of length t_pi.
    void set_echo_windows(double t_pi, int n_bounces = 1) {
        windows.clear();
        for (int k = 0; k < 2 * n_bounces; ++k)
            windows.push_back({k * t_pi, (k + 1) * t_pi, k % 2 == 1});
    }
};

struct ChiIntegrals {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda = 0.0;
    bool asymmetric = false; // |lambda1 - lambda2| / |lambda| > asymmetry_threshold

    static constexpr double asymmetry_threshold = 0.05;
};

namespace detail {
/// Trapezoidal integral of the piecewise-linear interpolant of (t, y) over [a, b].
inline double trapezoid(const std::vector<double> &t, const std::vector<double> &y, double a,
                        double b) {
    double s = 0.0;
    auto lerp = [&](std::size_t i, double x) {
        const double f = (x - t[i]) / (t[i + 1] - t[i]);
        return y[i] + f * (y[i + 1] - y[i]);
    };
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const double lo = std::max(a, t[i]), hi = std::min(b, t[i + 1]);
        if (hi <= lo)
            continue;
        s += 0.5 * (hi - lo) * (lerp(i, lo) + lerp(i, hi));
    }
    return s;
}
} // namespace detail

/**
 * lambda1 = sum over windows of int (chi_11 - chi_12), lambda2 likewise with
 * chi_22, where 1 and 2 follow the atoms through each pi pulse.
 */
inline ChiIntegrals chi_integrals(const ChiTrace &trace) {
    const auto n = trace.time.size();
    if (trace.chi_aa.size() != n || trace.chi_bb.size() != n || trace.chi_ab.size() != n)
        throw ConfigError("chi.trace", "chi trace columns have different lengths");
    if (n < 2)
        throw ConfigError("chi.coverage", "chi trace needs at least two samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(trace.time[i] >= trace.time[i - 1]))
            throw ConfigError("chi.trace", "chi trace times must be non-decreasing");
    if (trace.windows.empty())
        throw ConfigError("chi.coverage", "no integration windows");

    std::vector<double> da(n), db(n);
    for (std::size_t i = 0; i < n; ++i) {
        da[i] = trace.chi_aa[i] - trace.chi_ab[i];
        db[i] = trace.chi_bb[i] - trace.chi_ab[i];
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(trace.time.back() - trace.time.front()));
    ChiIntegrals out;
    for (const auto &w : trace.windows) {
        if (w.start < trace.time.front() - tol || w.end > trace.time.back() + tol ||
            !(w.end > w.start))
            throw ConfigError("chi.coverage", "chi trace does not cover window [" +
                                                  std::to_string(w.start) + ", " +
                                                  std::to_string(w.end) + "] s");
        const double ia = detail::trapezoid(trace.time, da, w.start, w.end);
        const double ib = detail::trapezoid(trace.time, db, w.start, w.end);
        out.lambda1 += w.swapped ? ib : ia;
        out.lambda2 += w.swapped ? ia : ib;
    }
    out.lambda = 0.5 * (out.lambda1 + out.lambda2);
    out.asymmetric = out.lambda != 0.0 && std::abs(out.lambda1 - out.lambda2) / std::abs(out.lambda) >
                                              ChiIntegrals::asymmetry_threshold;
    return out;
}

/// CSV with header `t_s,chi_aa_rad_per_s,chi_bb_rad_per_s,chi_ab_rad_per_s`.
inline void write_chi_csv(const std::filesystem::path &path, const ChiTrace &trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error("io", "cannot open " + path.string());
    out << "t_s,chi_aa_rad_per_s,chi_bb_rad_per_s,chi_ab_rad_per_s\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.time.size(); ++i)
        out << trace.time[i] << ',' << trace.chi_aa[i] << ',' << trace.chi_bb[i] << ','
            << trace.chi_ab[i] << '\n';
}

/// Reads the four-column CSV; windows are left empty.
inline ChiTrace read_chi_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error("io", "cannot open " + path.string());
    ChiTrace trace;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && std::isalpha(static_cast<unsigned char>(line[0]))))
            continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double t = 0, aa = 0, bb = 0, ab = 0;
        if (!(row >> t >> aa >> bb >> ab))
            throw ConfigError("chi.csv", path.string() + ":" + std::to_string(lineno) +
                                             ": expected four numeric columns");
        trace.push(t, aa, bb, ab);
    }
    return trace;
}

} // namespace bectwist::twomode
