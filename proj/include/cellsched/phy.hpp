#pragma once

#include <cstdint>
#include <string>

#include "cellsched/markov.hpp"

namespace cellsched {

// Distances from the serving and interfering base stations, plus the
// path-loss exponent. Far users sit closer to the interferer than near users.
struct CellGeometry {
    double d_near;
    double d_far;
    double d_cross_near; // interfering BS -> near user
    double d_cross_far;  // interfering BS -> far user
    double alpha;

    CellGeometry(double d_near_, double d_far_, double d_cross_near_, double d_cross_far_,
                 double alpha_);
};

// Two-level transmit powers: far users get p1, near users the reduced p2.
struct PowerLevels {
    double p1;
    double p2;

    PowerLevels(double p1_, double p2_);
};

enum class UserGroup : int { Near = 0, Far = 1 };

// |h|^2 power gains drawn per Monte Carlo sample.
// exponential: unit-mean exponential (Rayleigh amplitude), scaled by `mean`.
// constant: deterministic gain `mean` (degenerate fading, for closed-form tests).
struct FadingModel {
    enum class Kind { Exponential, Constant };
    Kind kind = Kind::Exponential;
    double mean = 1.0;

    static FadingModel exponential(double mean = 1.0);
    static FadingModel constant(double gain);
    static FadingModel parse(const std::string& text); // "exp", "exp:m", "const:g"

    double draw(CounterRng& rng) const;
};

// SINR of a far user served at full power p1 with the adjacent cell serving
// a near user at p2: (p1/d_far^a * h_s) / (noise + p2/d_cross_far^a * h_i).
double sinr_far(const PowerLevels& powers, const CellGeometry& geom, double h_signal,
                double h_interf, double noise);

// SINR of a near user served at p2 while the adjacent cell serves a far user
// at p1 across d_cross_near.
double sinr_near(const PowerLevels& powers, const CellGeometry& geom, double h_signal,
                 double h_interf, double noise);

// ACK iff sinr >= gamma.
Arq decode(double sinr, double gamma);

// Monte Carlo estimate of P(SINR >= gamma) for one user group under the
// breathing power assignment. Gains are drawn per sample from `fading`; the
// estimate depends only on (seed, samples), not on the worker count.
double capture_probability(UserGroup group, const PowerLevels& powers, const CellGeometry& geom,
                           double gamma, double noise, const FadingModel& fading,
                           std::uint64_t samples, std::uint64_t seed, int workers = 1);

} // namespace cellsched
