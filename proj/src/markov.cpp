#include "cellsched/markov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cellsched {

namespace {

constexpr double kProbTol = 1e-12;

void check_probability(double v, const char* name) {
    if (!(v >= -kProbTol && v <= 1.0 + kProbTol))
        throw std::invalid_argument(std::string(name) + " out of [0,1]: " + std::to_string(v));
}

} // namespace

TransitionMatrix::TransitionMatrix(double p_, double q_, double r_, double s_)
    : p(p_), q(q_), r(r_), s(s_) {
    check_probability(p, "p");
    check_probability(q, "q");
    check_probability(r, "r");
    check_probability(s, "s");
    if (std::abs(p + q - 1.0) > kProbTol)
        throw std::invalid_argument("p + q != 1");
    if (std::abs(r + s - 1.0) > kProbTol)
        throw std::invalid_argument("r + s != 1");
    if (p < r)
        throw std::invalid_argument("negatively correlated chain (p < r) rejected");
}

TransitionMatrix TransitionMatrix::from_pr(double p_, double r_) {
    return TransitionMatrix(p_, 1.0 - p_, r_, 1.0 - r_);
}

Belief t_operator(Belief x, const TransitionMatrix& chain) {
    return x * (chain.p - chain.r) + chain.r;
}

Belief t_power(Belief x, int l, const TransitionMatrix& chain) {
    if (l < 1)
        throw std::invalid_argument("t_power requires l >= 1");
    Belief v = x;
    for (int i = 0; i < l; ++i)
        v = t_operator(v, chain);
    return v;
}

Belief stationary_belief(const TransitionMatrix& chain) {
    double denom = 1.0 - chain.p + chain.r;
    if (denom == 0.0)
        throw std::invalid_argument("stationary belief undefined for p=1, r=0");
    return chain.r / denom;
}

std::vector<Belief> belief_update(const std::vector<Belief>& beliefs, int scheduled,
                                  Arq feedback, const TransitionMatrix& chain) {
    return sporadic_belief_update(beliefs, scheduled, feedback, 1, chain);
}

std::vector<Belief> sporadic_belief_update(const std::vector<Belief>& beliefs, int scheduled,
                                           Arq feedback, int gap, const TransitionMatrix& chain) {
    if (scheduled < 0 || scheduled >= static_cast<int>(beliefs.size()))
        throw std::out_of_range("scheduled user index out of range");
    if (gap < 1)
        throw std::invalid_argument("gap must be >= 1");
    std::vector<Belief> next(beliefs.size());
    for (int i = 0; i < static_cast<int>(beliefs.size()); ++i) {
        if (i == scheduled)
            next[i] = (feedback == Arq::Ack) ? chain.p : chain.r;
        else
            next[i] = t_power(beliefs[i], gap, chain);
    }
    return next;
}

ChannelState sample_transition(ChannelState current, const TransitionMatrix& chain, CounterRng& rng) {
    double on_prob = (current == ChannelState::On) ? chain.p : chain.r;
    return rng.next_bool(on_prob) ? ChannelState::On : ChannelState::Off;
}

} // namespace cellsched
