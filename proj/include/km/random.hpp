#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace km {

// Seeded generator. Doubles are built from raw mt19937_64 output so that
// sequences do not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
        return lo + (hi - lo) * u;
    }

    Eigen::VectorXd uniform_vec(int n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }

    // Uniform on the unit sphere by rejection from the cube.
    Eigen::VectorXd unit_vec(int n) {
        for (;;) {
            Eigen::VectorXd v = uniform_vec(n, -1.0, 1.0);
            const double r = v.norm();
            if (r > 1e-3 && r <= 1.0) return v / r;
        }
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace km
