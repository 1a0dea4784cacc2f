#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mred {

// State-occupancy probabilities of the queue-length birth-death chain.
// p[l] = P(l,t) for queue lengths l = 0..N-1; N is fixed for the lifetime
// of a simulation and the sum stays 1 up to integration round-off.
struct ProbabilityVector {
    std::vector<double> p;

    int n_states() const { return static_cast<int>(p.size()); }
    double sum() const;
    double min_value() const;
};

// Nearest-neighbour transition rates, rebuilt from the average queue size
// before each evolution. A rate depends only on its destination state d:
//
//     a(d, s) = exp(-|d + avg|)
//
//     forward[l]  = a(l+1, l)   rate of l -> l+1,   l = 0..N-2
//     backward[l] = a(l,  l+1)  rate of l+1 -> l,   l = 0..N-2
//
// 2N-2 stored rates in total. Entries whose true value is below the
// smallest positive normal double are flushed to exact zero, which keeps
// far-away states inert instead of dragging subnormals through the solver.
struct RateTable {
    std::vector<double> forward;
    std::vector<double> backward;
    double avg_used = 0.0;

    int n_states() const { return static_cast<int>(forward.size()) + 1; }
    double max_rate() const;
};

enum class InitMode { kUniform, kSeededRandom };

// p[l] = 1/N, or seeded positive draws normalised to sum 1.
ProbabilityVector init_probabilities(int n_states, InitMode mode,
                                     std::uint64_t seed = 0);

RateTable build_rate_table(double avg, int n_states);
// Same, reusing the table's storage (gateway hot path).
void build_rate_table_into(double avg, int n_states, RateTable& table);

// One forward Euler update of the master equation,
//
//   p'[l] = p[l] + dt * ( a(l,l+1) p[l+1] + a(l,l-1) p[l-1]
//                         - (a(l-1,l) + a(l+1,l)) p[l] )
//
// with the out-of-range gain/loss terms dropped at l = 0 and l = N-1.
// Each output element is independent, so the serial and OpenMP variants
// compute identical expressions and agree bit for bit; euler_step()
// dispatches between them on problem size.
void euler_step_serial(std::span<const double> p, const RateTable& rates,
                       double dt, std::span<double> out);
void euler_step_parallel(std::span<const double> p, const RateTable& rates,
                         double dt, std::span<double> out);
ProbabilityVector euler_step(const ProbabilityVector& pv,
                             const RateTable& rates, double dt);

// Per-arrival evolution: rebuild the rate table from the previous average
// once, then apply `substeps` Euler steps of size dt. Rejects dt that
// could break non-negativity (dt * 2 * max rate must stay below 1).
ProbabilityVector evolve_on_arrival(const ProbabilityVector& pv,
                                    double avg_prev, double dt, int substeps);
// In-place variant used by the gateway; reuses table and scratch storage.
void evolve_on_arrival_inplace(ProbabilityVector& pv, double avg_prev,
                               double dt, int substeps, RateTable& table,
                               std::vector<double>& scratch);

// P(q,t) for the current queue size; q must lie in [0, N-1].
double probability_of(const ProbabilityVector& pv, int q);

// Bytes held by the kernel state at a given buffer size: N probabilities,
// 2N-2 rates, N scratch values. Grows linearly with N.
std::size_t kernel_state_bytes(int n_states);

}  // namespace mred
