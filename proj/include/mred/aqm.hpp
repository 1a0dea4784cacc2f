#pragma once

#include "mred/markov_kernel.hpp"

namespace mred {

// Classic RED: thresholds plus the EWMA queue weight.
struct RedParams {
    double minth = 5.0;
    double maxth = 15.0;
    double maxp = 1.0 / 50.0;
    double w_q = 0.002;
    bool use_count_correction = true;

    void validate() const;  // throws std::invalid_argument naming the fields
};

// mRED: same thresholds, but no queue weight exists on this path -- the
// average comes from the master equation instead of an EWMA.
struct MredParams {
    double minth = 5.0;
    double maxth = 15.0;
    double maxp = 1.0 / 50.0;
    bool use_count_correction = true;

    void validate() const;
};

// Explicitly drops w_q.
MredParams strip_queue_weight(const RedParams& params);

struct KernelSettings {
    int n_states = 500;
    double dt = 0.01;
    int substeps = 1;

    void validate() const;
};

enum class DropKind { kNone, kMarked, kOverflow };

struct Verdict {
    bool dropped = false;
    DropKind kind = DropKind::kNone;
    double marking_prob_used = 0.0;
    double avg_at_decision = 0.0;
};

// avg <- (1 - w_q) * avg + w_q * q
double ewma_update(double avg, int q, double w_q);

// avg = q * P(q,t)
double mred_average(int q, const ProbabilityVector& pv);

// pb = maxp * (avg - minth) / (maxth - minth); with count correction,
// pa = pb / (1 - count * pb), clamped to [0,1]. Callers branch on the
// band first; calling outside [minth, maxth) is a contract violation.
double marking_probability(double avg, double minth, double maxth,
                           double maxp, bool use_count_correction, long count);
double marking_probability(double avg, const RedParams& params, long count);
double marking_probability(double avg, const MredParams& params, long count);

// Shared per-arrival admission skeleton. Both gateways run exactly this
// code; only update_average() differs between them.
//
//   avg < minth          -> enqueue, reset count
//   minth <= avg < maxth -> drop with the marking probability
//   maxth <= avg         -> drop
//
// Enqueues are subject to the hard buffer cap (queue length at most N-1);
// a full buffer turns the enqueue into a tail drop, counted separately.
class Gateway {
public:
    virtual ~Gateway() = default;

    Verdict on_arrival(double u);

    // Dequeue up to n packets.
    void service(int n) { q_ = (n >= q_) ? 0 : q_ - n; }

    int queue_len() const { return q_; }
    double average() const { return avg_; }
    long mark_count() const { return count_; }
    int capacity() const { return capacity_; }  // max queue length, N-1

    // Scenario injection; q must lie in [0, capacity], avg must be finite
    // and non-negative.
    void set_state(int q, double avg);

protected:
    Gateway(int n_states, double minth, double maxth, double maxp,
            bool use_count_correction);

    // Computes this arrival's average queue size from the gateway's state.
    virtual double update_average() = 0;

    int capacity_;
    int q_ = 0;
    double avg_ = 0.0;
    long count_ = 0;

private:
    Verdict admit(double u);

    double minth_;
    double maxth_;
    double maxp_;
    bool use_count_correction_;
};

class RedGateway final : public Gateway {
public:
    RedGateway(const RedParams& params, int n_states);

protected:
    // EWMA of the instantaneous queue length, sampled on every arrival.
    double update_average() override;

private:
    RedParams params_;
};

class MredGateway final : public Gateway {
public:
    MredGateway(const MredParams& params, const KernelSettings& kernel);

    const ProbabilityVector& probabilities() const { return pv_; }
    void set_probabilities(ProbabilityVector pv);  // dimension-checked
    std::size_t kernel_bytes() const;

protected:
    // Evolve the probabilities from the previous average, then read off
    // q * P(q,t).
    double update_average() override;

private:
    MredParams params_;
    KernelSettings kernel_;
    ProbabilityVector pv_;
    RateTable table_;
    std::vector<double> scratch_;
};

}  // namespace mred
