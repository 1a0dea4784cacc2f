#include "mred/aqm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mred {
namespace {

void check_thresholds(double minth, double maxth, double maxp) {
    if (!(minth >= 0.0))
        throw std::invalid_argument("minth must be non-negative, got " +
                                    std::to_string(minth));
    if (!(minth < maxth))
        throw std::invalid_argument(
            "minth (" + std::to_string(minth) +
            ") must be less than maxth (" + std::to_string(maxth) + ")");
    if (!(maxp > 0.0 && maxp <= 1.0))
        throw std::invalid_argument("maxp must lie in (0, 1], got " +
                                    std::to_string(maxp));
}

}  // namespace

void RedParams::validate() const {
    check_thresholds(minth, maxth, maxp);
    if (!(w_q > 0.0 && w_q <= 1.0))
        throw std::invalid_argument("w_q must lie in (0, 1], got " +
                                    std::to_string(w_q));
}

void MredParams::validate() const { check_thresholds(minth, maxth, maxp); }

MredParams strip_queue_weight(const RedParams& params) {
    return MredParams{params.minth, params.maxth, params.maxp,
                      params.use_count_correction};
}

void KernelSettings::validate() const {
    if (n_states < 2)
        throw std::invalid_argument("n_states must be >= 2, got " +
                                    std::to_string(n_states));
    if (!(dt > 0.0))
        throw std::invalid_argument("dt must be positive, got " +
                                    std::to_string(dt));
    // Rates never exceed 1, so this keeps dt * 2 * max rate below 1 for
    // every reachable average.
    if (!(dt < 0.5))
        throw std::invalid_argument("dt must be < 0.5 for stability, got " +
                                    std::to_string(dt));
    if (substeps < 1)
        throw std::invalid_argument("substeps must be >= 1, got " +
                                    std::to_string(substeps));
}

double ewma_update(double avg, int q, double w_q) {
    if (!(w_q > 0.0 && w_q <= 1.0))
        throw std::invalid_argument("ewma_update: w_q must lie in (0, 1], got " +
                                    std::to_string(w_q));
    return (1.0 - w_q) * avg + w_q * static_cast<double>(q);
}

double mred_average(int q, const ProbabilityVector& pv) {
    return static_cast<double>(q) * probability_of(pv, q);
}

double marking_probability(double avg, double minth, double maxth,
                           double maxp, bool use_count_correction,
                           long count) {
    if (!(avg >= minth && avg < maxth))
        throw std::logic_error(
            "marking_probability called with avg outside [minth, maxth); "
            "callers must branch on the band first");
    if (count < 0)
        throw std::logic_error("marking_probability: count must be >= 0");

    const double pb = maxp * (avg - minth) / (maxth - minth);
    if (!use_count_correction) return pb;

    const double scaled = static_cast<double>(count) * pb;
    if (scaled >= 1.0) return 1.0;
    const double pa = pb / (1.0 - scaled);
    return pa > 1.0 ? 1.0 : pa;
}

double marking_probability(double avg, const RedParams& params, long count) {
    return marking_probability(avg, params.minth, params.maxth, params.maxp,
                               params.use_count_correction, count);
}

double marking_probability(double avg, const MredParams& params, long count) {
    return marking_probability(avg, params.minth, params.maxth, params.maxp,
                               params.use_count_correction, count);
}

Gateway::Gateway(int n_states, double minth, double maxth, double maxp,
                 bool use_count_correction)
    : capacity_(n_states - 1),
      minth_(minth),
      maxth_(maxth),
      maxp_(maxp),
      use_count_correction_(use_count_correction) {
    if (n_states < 2)
        throw std::invalid_argument("gateway: n_states must be >= 2");
    check_thresholds(minth, maxth, maxp);
}

Verdict Gateway::on_arrival(double u) {
    avg_ = update_average();
    return admit(u);
}

void Gateway::set_state(int q, double avg) {
    if (q < 0 || q > capacity_)
        throw std::out_of_range("set_state: q outside [0, capacity]");
    if (!(avg >= 0.0) || !std::isfinite(avg))
        throw std::invalid_argument("set_state: avg must be finite and >= 0");
    q_ = q;
    avg_ = avg;
}

Verdict Gateway::admit(double u) {
    Verdict verdict;
    verdict.avg_at_decision = avg_;

    bool wants_enqueue = false;
    bool in_band = false;
    if (avg_ < minth_) {
        count_ = 0;
        wants_enqueue = true;
    } else if (avg_ < maxth_) {
        in_band = true;
        const double pa = marking_probability(avg_, minth_, maxth_, maxp_,
                                              use_count_correction_, count_);
        verdict.marking_prob_used = pa;
        if (u < pa) {
            verdict.dropped = true;
            verdict.kind = DropKind::kMarked;
            count_ = 0;
        } else {
            wants_enqueue = true;
        }
    } else {
        verdict.dropped = true;
        verdict.kind = DropKind::kMarked;
        verdict.marking_prob_used = 1.0;
        count_ = 0;
    }

    if (wants_enqueue) {
        if (q_ >= capacity_) {
            // Full buffer: tail drop. Not a mark, so the count is untouched.
            verdict.dropped = true;
            verdict.kind = DropKind::kOverflow;
        } else {
            ++q_;
            if (in_band) ++count_;
        }
    }
    return verdict;
}

RedGateway::RedGateway(const RedParams& params, int n_states)
    : Gateway(n_states, params.minth, params.maxth, params.maxp,
              params.use_count_correction),
      params_(params) {
    params_.validate();
}

double RedGateway::update_average() {
    // Every arrival samples the instantaneous queue, including q = 0: the
    // zero samples decay the average while the queue sits empty. Freezing
    // the average instead would leave the gateway stuck above maxth after
    // a congestion episode, dropping everything forever.
    return ewma_update(avg_, q_, params_.w_q);
}

MredGateway::MredGateway(const MredParams& params,
                         const KernelSettings& kernel)
    : Gateway(kernel.n_states, params.minth, params.maxth, params.maxp,
              params.use_count_correction),
      params_(params),
      kernel_(kernel),
      pv_(init_probabilities(kernel.n_states, InitMode::kUniform)) {
    params_.validate();
    kernel_.validate();
}

void MredGateway::set_probabilities(ProbabilityVector pv) {
    if (pv.n_states() != kernel_.n_states)
        throw std::invalid_argument(
            "set_probabilities: expected " + std::to_string(kernel_.n_states) +
            " states, got " + std::to_string(pv.n_states()));
    pv_ = std::move(pv);
}

std::size_t MredGateway::kernel_bytes() const {
    return kernel_state_bytes(kernel_.n_states);
}

double MredGateway::update_average() {
    evolve_on_arrival_inplace(pv_, avg_, kernel_.dt, kernel_.substeps, table_,
                              scratch_);
    return mred_average(q_, pv_);
}

}  // namespace mred
