#include "mred/traffic_sim.hpp"

#include <stdexcept>
#include <string>

namespace mred {
namespace {

// Salt for the marking-draw stream so it is independent of host selection.
constexpr std::uint64_t kMarkStreamSalt = 0x6d61726b73747265ULL;

const SimConfig& validated(const SimConfig& config) {
    config.validate();
    return config;
}

}  // namespace

int SimConfig::total_rate() const {
    int total = 0;
    for (const HostSpec& h : hosts) total += h.rate;
    return total;
}

void SimConfig::validate() const {
    if (hosts.empty())
        throw std::invalid_argument("hosts must not be empty");
    for (std::size_t i = 0; i < hosts.size(); ++i)
        if (hosts[i].rate < 1)
            throw std::invalid_argument("hosts[" + std::to_string(i) +
                                        "].rate must be >= 1, got " +
                                        std::to_string(hosts[i].rate));
    if (steps < 1)
        throw std::invalid_argument("steps must be >= 1, got " +
                                    std::to_string(steps));
    if (service_rate < 0)
        throw std::invalid_argument("service_rate must be >= 0, got " +
                                    std::to_string(service_rate));
    if (!(host_activation_prob > 0.0 && host_activation_prob <= 1.0))
        throw std::invalid_argument(
            "host_activation_prob must lie in (0, 1], got " +
            std::to_string(host_activation_prob));
    red.validate();
    KernelSettings{n_states, dt, substeps}.validate();
}

std::vector<int> select_active_hosts(int n_hosts, double activation_prob,
                                     Prng& prng) {
    if (n_hosts < 1)
        throw std::invalid_argument("select_active_hosts: need at least one host");
    std::vector<int> active;
    active.reserve(static_cast<std::size_t>(n_hosts));
    for (int i = 0; i < n_hosts; ++i)
        if (prng.next_bernoulli(activation_prob)) active.push_back(i);
    return active;
}

std::unique_ptr<Gateway> make_gateway(const SimConfig& config) {
    if (config.gateway == GatewayKind::kRed)
        return std::make_unique<RedGateway>(config.red, config.n_states);
    return std::make_unique<MredGateway>(
        strip_queue_weight(config.red),
        KernelSettings{config.n_states, config.dt, config.substeps});
}

Simulation::Simulation(const SimConfig& config)
    : config_(validated(config)),
      gateway_(make_gateway(config_)),
      host_prng_(splitmix64(config.seed)),
      mark_prng_(splitmix64(config.seed ^ kMarkStreamSalt)),
      per_host_drops_(config.hosts.size(), 0) {
    records_.reserve(static_cast<std::size_t>(config.steps));
}

StepRecord Simulation::step() {
    const std::vector<int> active = select_active_hosts(
        static_cast<int>(config_.hosts.size()), config_.host_activation_prob,
        host_prng_);

    StepRecord rec;
    rec.step = step_index_;
    for (int host : active) {
        for (int k = 0; k < config_.hosts[static_cast<std::size_t>(host)].rate;
             ++k) {
            const double u = mark_prng_.next_unit();
            const Verdict verdict = gateway_->on_arrival(u);
            ++rec.arrivals;
            if (verdict.dropped) {
                ++per_host_drops_[static_cast<std::size_t>(host)];
                if (verdict.kind == DropKind::kOverflow)
                    ++rec.overflow_drops;
                else
                    ++rec.drops;
            }
        }
    }
    gateway_->service(config_.service_rate);
    rec.queue_len_end = gateway_->queue_len();
    rec.avg_end = gateway_->average();

    ++step_index_;
    traffic_ += rec.arrivals;
    marked_ += rec.drops;
    overflow_ += rec.overflow_drops;
    records_.push_back(rec);
    return rec;
}

SimStats Simulation::finish() {
    while (step_index_ < config_.steps) step();

    SimStats stats;
    stats.total_traffic = traffic_;
    stats.marked_drops = marked_;
    stats.overflow_drops = overflow_;
    stats.total_drops = marked_ + overflow_;
    stats.utilisation =
        traffic_ > 0 ? 1.0 - static_cast<double>(stats.total_drops) /
                                 static_cast<double>(traffic_)
                     : 1.0;
    stats.per_host_drops = per_host_drops_;
    stats.records = std::move(records_);
    return stats;
}

SimStats run(const SimConfig& config) {
    Simulation sim(config);
    return sim.finish();
}

}  // namespace mred
