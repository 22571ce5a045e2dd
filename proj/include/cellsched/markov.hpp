#pragma once

#include <vector>

#include "cellsched/rng.hpp"

namespace cellsched {

// Probability that a user's channel is ON in the current interval.
using Belief = double;

enum class ChannelState : int { Off = 0, On = 1 };

enum class Arq : int { Nack = 0, Ack = 1 };

// Two-state channel chain. p = P(ON->ON), q = 1-p, r = P(OFF->ON), s = 1-r.
// Positively correlated chains only: p >= r. p = r (memoryless) is allowed.
struct TransitionMatrix {
    double p;
    double q;
    double r;
    double s;

    TransitionMatrix(double p_, double q_, double r_, double s_);

    // Builds the chain from the two ON-probabilities with q, s implied.
    static TransitionMatrix from_pr(double p_, double r_);
};

// One-step belief propagation for an unobserved user: T(x) = x(p-r) + r.
Belief t_operator(Belief x, const TransitionMatrix& chain);

// l-fold composition of t_operator, l >= 1. Result lies in [r, p].
Belief t_power(Belief x, int l, const TransitionMatrix& chain);

// Fixed point r / (1 - p + r); default initial belief for every user.
Belief stationary_belief(const TransitionMatrix& chain);

// Regular-axis update: the scheduled user's belief jumps to p (ACK) or r
// (NACK); every other user's belief propagates through t_operator.
std::vector<Belief> belief_update(const std::vector<Belief>& beliefs, int scheduled,
                                  Arq feedback, const TransitionMatrix& chain);

// Sporadic-axis update across `gap` raw intervals: the scheduled user's belief
// jumps to p or r; every other user's belief propagates through t_power(., gap).
std::vector<Belief> sporadic_belief_update(const std::vector<Belief>& beliefs, int scheduled,
                                           Arq feedback, int gap, const TransitionMatrix& chain);

// Draws the next channel state: ON->ON w.p. p, OFF->ON w.p. r.
ChannelState sample_transition(ChannelState current, const TransitionMatrix& chain, CounterRng& rng);

} // namespace cellsched
