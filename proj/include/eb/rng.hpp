#pragma once

// Deterministic random streams. All transforms (uniform, normal, discrete)
// are implemented here rather than via std::*_distribution, whose output is
// implementation-defined and would break byte-identical reruns across
// standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "eb/errors.hpp"

namespace eb {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Named stream derived from a master seed; independent streams for
    // sampling / bootstrap / restarts fan out from one 64-bit seed.
    Rng(std::uint64_t master, std::string_view stream) {
        std::uint64_t s = master ^ fnv1a64(stream);
        gen_.seed(splitmix64(s));
    }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Box-Muller; second deviate cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Index draw from the distribution given by weights (need not be
    // normalized); CDF inversion with binary search.
    std::size_t discrete(const std::vector<double>& cdf) {
        double u = uniform() * cdf.back();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf[mid] <= u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return lo;
    }

    static std::vector<double> make_cdf(const Eigen::VectorXd& p) {
        std::vector<double> cdf(static_cast<std::size_t>(p.size()));
        double acc = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            acc += p[j];
            cdf[static_cast<std::size_t>(j)] = acc;
        }
        return cdf;
    }

    // Counts from n independent category draws.
    Eigen::VectorXd multinomial(long long n, const Eigen::VectorXd& p) {
        if (n < 0) throw NumericalError("multinomial: negative count");
        auto cdf = make_cdf(p);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(p.size());
        for (long long k = 0; k < n; ++k) y[static_cast<Eigen::Index>(discrete(cdf))] += 1.0;
        return y;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace eb
