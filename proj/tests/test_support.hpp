#pragma once

#include <cstdint>
#include <random>

#include "km/cr3bp.hpp"
#include "km/random.hpp"

namespace km::testkit {

using Rng = km::Rng;

// Random state with q at least min_dist away from both primaries.
inline PhaseState random_state(Rng& rng, const SystemParams& params, double box = 2.0,
                               double min_dist = 0.05) {
    for (;;) {
        Vec q = rng.uniform_vec(params.n(), -box, box);
        if ((q - params.earth()).norm() < min_dist || (q - params.moon()).norm() < min_dist) continue;
        return {q, rng.uniform_vec(params.n(), -box, box)};
    }
}

}  // namespace km::testkit
