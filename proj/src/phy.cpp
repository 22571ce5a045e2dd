#include "cellsched/phy.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace cellsched {

CellGeometry::CellGeometry(double d_near_, double d_far_, double d_cross_near_,
                           double d_cross_far_, double alpha_)
    : d_near(d_near_), d_far(d_far_), d_cross_near(d_cross_near_), d_cross_far(d_cross_far_),
      alpha(alpha_) {
    if (!(d_near > 0.0 && d_far > 0.0 && d_cross_near > 0.0 && d_cross_far > 0.0))
        throw std::invalid_argument("distances must be positive");
    if (!(d_far > d_near))
        throw std::invalid_argument("d_far must exceed d_near");
    if (!(alpha >= 2.0))
        throw std::invalid_argument("alpha must be >= 2");
}

PowerLevels::PowerLevels(double p1_, double p2_) : p1(p1_), p2(p2_) {
    if (!(p2 > 0.0 && p2 < p1))
        throw std::invalid_argument("powers must satisfy 0 < p2 < p1");
}

FadingModel FadingModel::exponential(double mean) {
    if (!(mean > 0.0))
        throw std::invalid_argument("exponential fading mean must be positive");
    FadingModel m;
    m.kind = Kind::Exponential;
    m.mean = mean;
    return m;
}

FadingModel FadingModel::constant(double gain) {
    if (!(gain >= 0.0))
        throw std::invalid_argument("constant fading gain must be non-negative");
    FadingModel m;
    m.kind = Kind::Constant;
    m.mean = gain;
    return m;
}

FadingModel FadingModel::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string name = text.substr(0, colon);
    double value = 1.0;
    if (colon != std::string::npos)
        value = std::stod(text.substr(colon + 1));
    if (name == "exp" || name == "exponential")
        return exponential(value);
    if (name == "const" || name == "constant")
        return constant(value);
    throw std::invalid_argument("unknown fading model: " + text);
}

double FadingModel::draw(CounterRng& rng) const {
    switch (kind) {
    case Kind::Constant:
        return mean;
    case Kind::Exponential:
    default: {
        double u = rng.next_double();
        return -mean * std::log1p(-u); // inverse CDF, u in [0,1)
    }
    }
}

namespace {

double sinr_ratio(double sig_power, double sig_dist, double int_power, double int_dist,
                  double alpha, double h_signal, double h_interf, double noise) {
    if (h_signal < 0.0 || h_interf < 0.0)
        throw std::invalid_argument("fading gains must be non-negative");
    if (noise < 0.0)
        throw std::invalid_argument("noise must be non-negative");
    if (noise == 0.0 && h_interf == 0.0)
        throw std::invalid_argument("noise and interference both zero");
    double signal = sig_power / std::pow(sig_dist, alpha) * h_signal;
    double interference = int_power / std::pow(int_dist, alpha) * h_interf;
    return signal / (noise + interference);
}

} // namespace

double sinr_far(const PowerLevels& powers, const CellGeometry& geom, double h_signal,
                double h_interf, double noise) {
    return sinr_ratio(powers.p1, geom.d_far, powers.p2, geom.d_cross_far, geom.alpha, h_signal,
                      h_interf, noise);
}

double sinr_near(const PowerLevels& powers, const CellGeometry& geom, double h_signal,
                 double h_interf, double noise) {
    return sinr_ratio(powers.p2, geom.d_near, powers.p1, geom.d_cross_near, geom.alpha, h_signal,
                      h_interf, noise);
}

Arq decode(double sinr, double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("gamma must be positive");
    return sinr >= gamma ? Arq::Ack : Arq::Nack;
}

double capture_probability(UserGroup group, const PowerLevels& powers, const CellGeometry& geom,
                           double gamma, double noise, const FadingModel& fading,
                           std::uint64_t samples, std::uint64_t seed, int workers) {
    if (samples < 1)
        throw std::invalid_argument("samples must be >= 1");
    if (workers < 1)
        workers = 1;

    auto count_range = [&](std::uint64_t begin, std::uint64_t end) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            // One stream per sample: the estimate is worker-count invariant.
            CounterRng rng = CounterRng::stream(seed, {static_cast<std::uint64_t>(group), i});
            double hs = fading.draw(rng);
            double hi = fading.draw(rng);
            double s = (group == UserGroup::Far) ? sinr_far(powers, geom, hs, hi, noise)
                                                 : sinr_near(powers, geom, hs, hi, noise);
            if (s >= gamma)
                ++hits;
        }
        return hits;
    };

    if (workers == 1)
        return double(count_range(0, samples)) / double(samples);

    std::vector<std::uint64_t> counts(workers, 0);
    std::vector<std::thread> pool;
    std::uint64_t chunk = (samples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::uint64_t begin = std::uint64_t(w) * chunk;
        std::uint64_t end = std::min(samples, begin + chunk);
        if (begin >= end)
            break;
        pool.emplace_back([&, w, begin, end] { counts[w] = count_range(begin, end); });
    }
    for (auto& t : pool)
        t.join();
    std::uint64_t total = 0;
    for (auto c : counts)
        total += c;
    return double(total) / double(samples);
}

} // namespace cellsched
