#include "mred/markov_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mred/prng.hpp"

namespace mred {
namespace {

// Below these sizes the OpenMP fork/join overhead outweighs the loop work
// (the build loop is exp-bound, the Euler loop is a cheap stencil), so the
// dispatching entry points stay serial for small buffers.
constexpr int kBuildParallelGrain = 65536;
constexpr int kEulerParallelGrain = 65536;

// exp(-709) is already subnormal, so larger exponents flush without paying
// for the library call (whose underflow path is slow enough to break the
// linear cost profile at large N).
constexpr double kFlushExponent = 709.0;

// a(dest, src) = exp(-|dest + avg|), flushed to exact zero once the true
// value drops below the smallest positive normal double.
inline double rate_to(int dest, double avg) {
    const double x = std::fabs(static_cast<double>(dest) + avg);
    if (x > kFlushExponent) return 0.0;
    const double r = std::exp(-x);
    return r < std::numeric_limits<double>::min() ? 0.0 : r;
}

// Gains from the neighbours, losses to the neighbours; boundary states
// simply have no neighbour on one side. Elements are independent, which
// is what makes the parallel variant bit-identical to the serial one.
inline double euler_element(std::span<const double> p, const RateTable& r,
                            double dt, int l, int n) {
    double flow = 0.0;
    if (l + 1 < n)
        flow += r.backward[l] * p[l + 1] - r.forward[l] * p[l];
    if (l > 0)
        flow += r.forward[l - 1] * p[l - 1] - r.backward[l - 1] * p[l];
    return p[l] + dt * flow;
}

void check_step_args(std::span<const double> p, const RateTable& rates,
                     std::span<double> out) {
    const int n = static_cast<int>(p.size());
    if (n < 2)
        throw std::invalid_argument("euler_step: need at least 2 states");
    if (rates.n_states() != n)
        throw std::invalid_argument(
            "euler_step: rate table built for " +
            std::to_string(rates.n_states()) + " states, got " +
            std::to_string(n));
    if (out.size() != p.size())
        throw std::invalid_argument("euler_step: output size mismatch");
}

void euler_step_into(std::span<const double> p, const RateTable& rates,
                     double dt, std::span<double> out) {
    if (static_cast<int>(p.size()) >= kEulerParallelGrain)
        euler_step_parallel(p, rates, dt, out);
    else
        euler_step_serial(p, rates, dt, out);
}

}  // namespace

double ProbabilityVector::sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

double ProbabilityVector::min_value() const {
    return p.empty() ? 0.0 : *std::min_element(p.begin(), p.end());
}

double RateTable::max_rate() const {
    double m = 0.0;
    for (double v : forward) m = std::max(m, v);
    for (double v : backward) m = std::max(m, v);
    return m;
}

ProbabilityVector init_probabilities(int n_states, InitMode mode,
                                     std::uint64_t seed) {
    if (n_states < 2)
        throw std::invalid_argument("init_probabilities: n_states must be >= 2");
    ProbabilityVector pv;
    pv.p.resize(static_cast<std::size_t>(n_states));
    if (mode == InitMode::kUniform) {
        std::fill(pv.p.begin(), pv.p.end(), 1.0 / n_states);
    } else {
        Prng prng(splitmix64(seed));
        double total = 0.0;
        for (double& v : pv.p) {
            v = prng.next_unit_positive();
            total += v;
        }
        for (double& v : pv.p) v /= total;
    }
    return pv;
}

void build_rate_table_into(double avg, int n_states, RateTable& table) {
    if (avg < 0.0)
        throw std::invalid_argument(
            "build_rate_table: avg must be non-negative, got " +
            std::to_string(avg));
    if (n_states < 2)
        throw std::invalid_argument("build_rate_table: n_states must be >= 2");

    const int n = n_states;
    table.forward.resize(static_cast<std::size_t>(n - 1));
    table.backward.resize(static_cast<std::size_t>(n - 1));
    table.avg_used = avg;

    // The rate value depends only on the destination state, so each exp is
    // evaluated once and fans out into the two stored slots that share it:
    // rate_to(l) is both backward[l] (arriving at l from l+1) and, shifted,
    // forward[l-1] (arriving at l from l-1).
    double* fwd = table.forward.data();
    double* bwd = table.backward.data();
    if (n >= kBuildParallelGrain) {
#pragma omp parallel for schedule(static)
        for (int l = 0; l < n; ++l) {
            const double r = rate_to(l, avg);
            if (l < n - 1) bwd[l] = r;
            if (l > 0) fwd[l - 1] = r;
        }
    } else {
        for (int l = 0; l < n; ++l) {
            const double r = rate_to(l, avg);
            if (l < n - 1) bwd[l] = r;
            if (l > 0) fwd[l - 1] = r;
        }
    }
}

RateTable build_rate_table(double avg, int n_states) {
    RateTable table;
    build_rate_table_into(avg, n_states, table);
    return table;
}

void euler_step_serial(std::span<const double> p, const RateTable& rates,
                       double dt, std::span<double> out) {
    check_step_args(p, rates, out);
    const int n = static_cast<int>(p.size());
    for (int l = 0; l < n; ++l) out[l] = euler_element(p, rates, dt, l, n);
}

void euler_step_parallel(std::span<const double> p, const RateTable& rates,
                         double dt, std::span<double> out) {
    check_step_args(p, rates, out);
    const int n = static_cast<int>(p.size());
#pragma omp parallel for schedule(static)
    for (int l = 0; l < n; ++l) out[l] = euler_element(p, rates, dt, l, n);
}

ProbabilityVector euler_step(const ProbabilityVector& pv,
                             const RateTable& rates, double dt) {
    ProbabilityVector next;
    next.p.resize(pv.p.size());
    euler_step_into(pv.p, rates, dt, next.p);
    return next;
}

void evolve_on_arrival_inplace(ProbabilityVector& pv, double avg_prev,
                               double dt, int substeps, RateTable& table,
                               std::vector<double>& scratch) {
    if (substeps < 1)
        throw std::invalid_argument("evolve_on_arrival: substeps must be >= 1");
    if (!(dt > 0.0))
        throw std::invalid_argument("evolve_on_arrival: dt must be positive");

    build_rate_table_into(avg_prev, pv.n_states(), table);

    // Non-negativity guard: the worst per-state outflow is bounded by twice
    // the largest rate, and forward Euler keeps p >= 0 only while
    // dt * outflow <= 1.
    if (dt * 2.0 * table.max_rate() >= 1.0)
        throw std::invalid_argument(
            "evolve_on_arrival: dt too large for stability (dt * 2 * max "
            "rate must be < 1)");

    scratch.resize(pv.p.size());
    for (int s = 0; s < substeps; ++s) {
        euler_step_into(pv.p, table, dt, scratch);
        pv.p.swap(scratch);
    }
}

ProbabilityVector evolve_on_arrival(const ProbabilityVector& pv,
                                    double avg_prev, double dt, int substeps) {
    ProbabilityVector next = pv;
    RateTable table;
    std::vector<double> scratch;
    evolve_on_arrival_inplace(next, avg_prev, dt, substeps, table, scratch);
    return next;
}

double probability_of(const ProbabilityVector& pv, int q) {
    if (q < 0 || q >= pv.n_states())
        throw std::out_of_range("probability_of: queue length " +
                                std::to_string(q) + " outside [0, " +
                                std::to_string(pv.n_states() - 1) + "]");
    return pv.p[static_cast<std::size_t>(q)];
}

std::size_t kernel_state_bytes(int n_states) {
    const std::size_t n = static_cast<std::size_t>(n_states);
    const std::size_t probabilities = n;
    const std::size_t rates = 2 * (n - 1);
    const std::size_t scratch = n;
    return (probabilities + rates + scratch) * sizeof(double);
}

}  // namespace mred
