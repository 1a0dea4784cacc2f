#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mred/aqm.hpp"
#include "mred/prng.hpp"

namespace mred {

enum class GatewayKind { kRed, kMred };

struct HostSpec {
    int rate = 1;  // packets emitted per active step
};

struct SimConfig {
    std::vector<HostSpec> hosts = {{2}, {3}, {2}, {1}, {6}, {4}};
    long steps = 10000;
    std::uint64_t seed = 1;
    GatewayKind gateway = GatewayKind::kRed;
    RedParams red;  // the mRED path reads the thresholds only, never w_q
    int n_states = 500;
    double dt = 0.01;
    int substeps = 1;
    int service_rate = 10;  // packets dequeued at the end of each step
    double host_activation_prob = 0.5;

    int total_rate() const;
    void validate() const;  // throws std::invalid_argument naming the fields
};

struct StepRecord {
    long step = 0;
    int arrivals = 0;
    int drops = 0;           // marking drops
    int overflow_drops = 0;  // full-buffer tail drops
    int queue_len_end = 0;
    double avg_end = 0.0;
};

struct SimStats {
    long total_traffic = 0;
    long total_drops = 0;  // marked + overflow
    long marked_drops = 0;
    long overflow_drops = 0;
    double utilisation = 1.0;  // 1 - total_drops / total_traffic
    std::vector<long> per_host_drops;
    std::vector<StepRecord> records;
};

// Each host is included independently with the given probability; exactly
// one draw per host, in index order, so the schedule is identical for any
// gateway run from the same seed.
std::vector<int> select_active_hosts(int n_hosts, double activation_prob,
                                     Prng& prng);

std::unique_ptr<Gateway> make_gateway(const SimConfig& config);

// One run. PRNG consumption per step: one activation draw per host from
// the host stream, then one marking draw per arriving packet from the
// marking stream (drawn whether or not the verdict uses it). The two
// streams are seeded from splitmix64 of the run seed, so runs are fully
// reproducible and RED/mRED see the same traffic schedule.
class Simulation {
public:
    explicit Simulation(const SimConfig& config);

    StepRecord step();
    SimStats finish();  // runs any remaining steps, then aggregates

    Gateway& gateway() { return *gateway_; }
    const Gateway& gateway() const { return *gateway_; }
    long steps_done() const { return step_index_; }

private:
    SimConfig config_;
    std::unique_ptr<Gateway> gateway_;
    Prng host_prng_;
    Prng mark_prng_;
    long step_index_ = 0;
    long traffic_ = 0;
    long marked_ = 0;
    long overflow_ = 0;
    std::vector<long> per_host_drops_;
    std::vector<StepRecord> records_;
};

SimStats run(const SimConfig& config);

}  // namespace mred
