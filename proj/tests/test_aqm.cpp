#include "mred/aqm.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "mred/prng.hpp"

using namespace mred;

namespace {

template <typename T>
concept HasQueueWeight = requires(T t) { t.w_q; };

// The mRED parameter surface has no queue weight at all; that field only
// exists on the classic-RED side.
static_assert(HasQueueWeight<RedParams>);
static_assert(!HasQueueWeight<MredParams>);

// Replays a recorded average sequence through the shared admission
// skeleton, so verdict traces can be compared against a real gateway.
class ScriptedGateway final : public Gateway {
public:
    ScriptedGateway(int n_states, double minth, double maxth, double maxp,
                    bool use_count_correction, std::deque<double> script)
        : Gateway(n_states, minth, maxth, maxp, use_count_correction),
          script_(std::move(script)) {}

protected:
    double update_average() override {
        const double avg = script_.front();
        script_.pop_front();
        return avg;
    }

private:
    std::deque<double> script_;
};

bool same_verdict(const Verdict& a, const Verdict& b) {
    return a.dropped == b.dropped && a.kind == b.kind &&
           a.marking_prob_used == b.marking_prob_used &&
           a.avg_at_decision == b.avg_at_decision;
}

}  // namespace

TEST_CASE("parameter validation names the offending fields") {
    RedParams bad;
    bad.minth = 15.0;
    bad.maxth = 5.0;
    try {
        bad.validate();
        FAIL("expected a validation error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("minth") != std::string::npos);
        CHECK(msg.find("maxth") != std::string::npos);
    }

    RedParams maxp_out;
    maxp_out.maxp = 0.0;
    CHECK_THROWS_AS(maxp_out.validate(), std::invalid_argument);

    RedParams w_out;
    w_out.w_q = 1.5;
    CHECK_THROWS_AS(w_out.validate(), std::invalid_argument);

    MredParams mred_bad;
    mred_bad.minth = -1.0;
    CHECK_THROWS_AS(mred_bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS((KernelSettings{1, 0.01, 1}.validate()),
                    std::invalid_argument);
    CHECK_THROWS_AS((KernelSettings{500, 0.5, 1}.validate()),
                    std::invalid_argument);
    CHECK_THROWS_AS((KernelSettings{500, 0.01, 0}.validate()),
                    std::invalid_argument);
    CHECK_NOTHROW((KernelSettings{500, 0.01, 1}.validate()));
}

TEST_CASE("strip_queue_weight copies the shared thresholds") {
    RedParams red;
    red.minth = 3.0;
    red.maxth = 9.0;
    red.maxp = 0.1;
    red.w_q = 0.5;
    red.use_count_correction = false;
    const MredParams mred = strip_queue_weight(red);
    CHECK(mred.minth == 3.0);
    CHECK(mred.maxth == 9.0);
    CHECK(mred.maxp == 0.1);
    CHECK(mred.use_count_correction == false);
}

TEST_CASE("ewma_update: examples and validation") {
    CHECK(ewma_update(0.0, 10, 1.0) == 10.0);
    CHECK(ewma_update(7.0, 7, 0.002) == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(ewma_update(0.0, 10, 0.002) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK_THROWS_AS(ewma_update(0.0, 1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ewma_update(0.0, 1, 1.0001), std::invalid_argument);
}

TEST_CASE("ewma_update: geometric contraction toward a constant queue") {
    Prng prng(42);
    for (int i = 0; i < 200; ++i) {
        const double avg = prng.next_unit() * 30.0;
        const int q = static_cast<int>(prng.next_u64() % 40);
        const double w = prng.next_unit_positive();
        const double next = ewma_update(avg, q, w);
        CHECK(std::fabs(next - q) ==
              doctest::Approx((1.0 - w) * std::fabs(avg - q)).epsilon(1e-12));
        // convex combination stays between the inputs
        CHECK(next >= std::min(avg, static_cast<double>(q)) - 1e-12);
        CHECK(next <= std::max(avg, static_cast<double>(q)) + 1e-12);
    }
}

TEST_CASE("mred_average: q * P(q,t)") {
    const ProbabilityVector uniform = init_probabilities(500, InitMode::kUniform);
    CHECK(mred_average(0, uniform) == 0.0);
    CHECK(mred_average(10, uniform) == doctest::Approx(0.02).epsilon(1e-15));

    ProbabilityVector pv = init_probabilities(500, InitMode::kUniform);
    pv.p[5] = 0.06;  // not renormalised; only the extraction matters here
    CHECK(mred_average(5, pv) == doctest::Approx(0.3).epsilon(1e-15));

    CHECK_THROWS_AS(mred_average(500, uniform), std::out_of_range);
    CHECK_THROWS_AS(mred_average(-1, uniform), std::out_of_range);
}

TEST_CASE("marking_probability: edges, correction, clamping") {
    // lower edge
    CHECK(marking_probability(5.0, 5.0, 15.0, 0.02, true, 0) == 0.0);
    // mid-band, no correction
    CHECK(marking_probability(10.0, 5.0, 15.0, 0.02, false, 50) ==
          doctest::Approx(0.01).epsilon(1e-15));
    // mid-band with correction: 0.01 / (1 - 50 * 0.01)
    CHECK(marking_probability(10.0, 5.0, 15.0, 0.02, true, 50) ==
          doctest::Approx(0.02).epsilon(1e-15));
    // correction clamps to 1 once count * pb reaches 1
    CHECK(marking_probability(10.0, 5.0, 15.0, 0.02, true, 100) == 1.0);
    CHECK(marking_probability(10.0, 5.0, 15.0, 0.02, true, 100000) == 1.0);

    CHECK_THROWS_AS(marking_probability(4.999, 5.0, 15.0, 0.02, true, 0),
                    std::logic_error);
    CHECK_THROWS_AS(marking_probability(15.0, 5.0, 15.0, 0.02, true, 0),
                    std::logic_error);
    CHECK_THROWS_AS(marking_probability(10.0, 5.0, 15.0, 0.02, true, -1),
                    std::logic_error);

    RedParams red;
    CHECK(marking_probability(10.0, red, 0) ==
          doctest::Approx(0.01).epsilon(1e-15));
    CHECK(marking_probability(10.0, strip_queue_weight(red), 0) ==
          doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("marking_probability: non-decreasing in avg") {
    Prng prng(11);
    for (int i = 0; i < 300; ++i) {
        double a = 5.0 + prng.next_unit() * 10.0 * 0.9999;
        double b = 5.0 + prng.next_unit() * 10.0 * 0.9999;
        if (a > b) std::swap(a, b);
        const long count = static_cast<long>(prng.next_u64() % 80);
        CHECK(marking_probability(a, 5.0, 15.0, 0.02, true, count) <=
              marking_probability(b, 5.0, 15.0, 0.02, true, count) + 1e-15);
    }
}

TEST_CASE("red gateway: arrivals to an empty queue enqueue and decay the avg") {
    RedGateway gw(RedParams{}, 500);
    const Verdict v = gw.on_arrival(0.9999);
    CHECK_FALSE(v.dropped);
    CHECK(gw.queue_len() == 1);
    CHECK(v.avg_at_decision == 0.0);

    RedGateway idle(RedParams{}, 500);
    idle.set_state(0, 3.0);
    const Verdict v2 = idle.on_arrival(0.5);
    CHECK(v2.avg_at_decision ==
          doctest::Approx(0.998 * 3.0).epsilon(1e-15));  // q == 0 sample
    CHECK_FALSE(v2.dropped);
}

TEST_CASE("red gateway: recovers after a congestion episode drains the queue") {
    // Force the average above maxth with an empty queue, then offer
    // traffic: the zero-queue EWMA samples must bring the gateway back
    // below maxth so it can admit again.
    RedGateway gw(RedParams{}, 500);
    gw.set_state(0, 30.0);
    int admitted = 0;
    for (int i = 0; i < 5000; ++i) {
        const Verdict v = gw.on_arrival(0.999999);
        if (!v.dropped) ++admitted;
        gw.service(10);
    }
    CHECK(admitted > 0);
    CHECK(gw.average() < 15.0);
}

TEST_CASE("red gateway: average at or above maxth always drops") {
    RedGateway gw(RedParams{}, 500);
    gw.set_state(3, 20.0);
    for (double u : {0.0, 0.5, 0.999999}) {
        const Verdict v = gw.on_arrival(u);
        CHECK(v.dropped);
        CHECK(v.kind == DropKind::kMarked);
        CHECK(v.marking_prob_used == 1.0);
        CHECK(v.avg_at_decision >= 15.0);
    }
    CHECK(gw.queue_len() == 3);
}

TEST_CASE("red gateway: in-band arrival with a large draw is enqueued") {
    RedGateway gw(RedParams{}, 500);
    gw.set_state(10, 10.0);  // EWMA fixed point: avg stays 10
    const Verdict v = gw.on_arrival(0.999);
    CHECK_FALSE(v.dropped);
    CHECK(v.marking_prob_used == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(gw.queue_len() == 11);
    CHECK(gw.mark_count() == 1);
}

TEST_CASE("red gateway: full buffer tail-drops even below minth") {
    RedParams params;
    RedGateway gw(params, 4);  // capacity 3
    CHECK(gw.capacity() == 3);
    for (int i = 0; i < 3; ++i) CHECK_FALSE(gw.on_arrival(0.99).dropped);
    const Verdict v = gw.on_arrival(0.99);
    CHECK(v.dropped);
    CHECK(v.kind == DropKind::kOverflow);
    CHECK(gw.queue_len() == 3);
}

TEST_CASE("gateway: service drains without going negative") {
    RedGateway gw(RedParams{}, 500);
    gw.set_state(7, 0.0);
    gw.service(3);
    CHECK(gw.queue_len() == 4);
    gw.service(100);
    CHECK(gw.queue_len() == 0);
}

TEST_CASE("gateway: set_state validates its inputs") {
    RedGateway gw(RedParams{}, 10);
    CHECK_THROWS_AS(gw.set_state(-1, 0.0), std::out_of_range);
    CHECK_THROWS_AS(gw.set_state(10, 0.0), std::out_of_range);  // capacity is 9
    CHECK_THROWS_AS(gw.set_state(2, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(gw.set_state(2, std::nan("")), std::invalid_argument);
}

TEST_CASE("gateway: one branch fires for every finite average") {
    RedGateway gw(RedParams{}, 500);
    for (double avg : {0.0, 4.999, 5.0, 9.3, 14.999, 15.0, 80.0}) {
        gw.set_state(2, avg);
        const Verdict v = gw.on_arrival(0.5);
        if (v.avg_at_decision < 5.0) {
            CHECK_FALSE(v.dropped);
            CHECK(v.marking_prob_used == 0.0);
        } else if (v.avg_at_decision < 15.0) {
            CHECK(v.marking_prob_used < 1.0);
        } else {
            CHECK(v.dropped);
            CHECK(v.marking_prob_used == 1.0);
        }
    }
}

TEST_CASE("mred gateway: first arrival on an empty queue is admitted") {
    MredGateway gw(MredParams{}, KernelSettings{500, 0.01, 1});
    const Verdict v = gw.on_arrival(0.0);
    CHECK_FALSE(v.dropped);
    CHECK(v.avg_at_decision == 0.0);  // avg = 0 * P(0,t)
    CHECK(gw.queue_len() == 1);
    CHECK(std::fabs(gw.probabilities().sum() - 1.0) <= 1e-12);
}

TEST_CASE("mred gateway: average stays within [0, q] across a random run") {
    MredGateway gw(MredParams{}, KernelSettings{100, 0.01, 1});
    Prng prng(6);
    for (int i = 0; i < 2000; ++i) {
        gw.on_arrival(prng.next_unit());
        CHECK(gw.average() >= 0.0);
        CHECK(gw.average() <= static_cast<double>(gw.queue_len()));
        if (i % 3 == 0) gw.service(2);
    }
}

TEST_CASE("mred gateway: concentrated probability enters the marking band") {
    MredParams params;
    params.minth = 4.0;
    MredGateway gw(params, KernelSettings{500, 0.01, 1});
    ProbabilityVector spike = init_probabilities(500, InitMode::kUniform);
    for (double& v : spike.p) v = 0.0;
    spike.p[5] = 1.0;
    gw.set_probabilities(spike);
    gw.set_state(5, 0.0);

    const Verdict v = gw.on_arrival(0.99999);
    // one Euler step spreads only a sliver of mass away from state 5
    CHECK(v.avg_at_decision >= 4.0);
    CHECK(v.avg_at_decision < 15.0);
    CHECK(v.marking_prob_used > 0.0);

    ProbabilityVector wrong_size = init_probabilities(10, InitMode::kUniform);
    CHECK_THROWS_AS(gw.set_probabilities(wrong_size), std::invalid_argument);
}

TEST_CASE("mred gateway: kernel accounting matches the state size") {
    MredGateway gw(MredParams{}, KernelSettings{2000, 0.01, 1});
    CHECK(gw.kernel_bytes() == kernel_state_bytes(2000));
}

TEST_CASE("verdict sequence is a function of the average sequence alone") {
    // Record a real run, then replay its averages through the scripted
    // skeleton with the same draws: verdicts, counts, and queue must match.
    const auto replay_matches = [](Gateway& original, int n_states,
                                   double minth, double maxth, double maxp,
                                   bool ucc) {
        Prng u_draws(505);
        std::vector<double> u_trace;
        std::vector<Verdict> verdicts;
        std::deque<double> avg_trace;
        for (int i = 0; i < 1500; ++i) {
            const double u = u_draws.next_unit();
            u_trace.push_back(u);
            const Verdict v = original.on_arrival(u);
            verdicts.push_back(v);
            avg_trace.push_back(v.avg_at_decision);
            if (i % 4 == 0) original.service(3);
        }

        ScriptedGateway scripted(n_states, minth, maxth, maxp, ucc, avg_trace);
        for (int i = 0; i < 1500; ++i) {
            const Verdict v = scripted.on_arrival(u_trace[static_cast<std::size_t>(i)]);
            if (!same_verdict(v, verdicts[static_cast<std::size_t>(i)]))
                return false;
            if (i % 4 == 0) scripted.service(3);
        }
        return true;
    };

    RedParams red;
    red.minth = 1.0;
    red.maxth = 6.0;
    red.w_q = 0.3;  // fast-moving average so every branch is exercised
    RedGateway red_gw(red, 30);
    CHECK(replay_matches(red_gw, 30, red.minth, red.maxth, red.maxp,
                         red.use_count_correction));

    MredParams mred;
    mred.minth = 0.5;
    mred.maxth = 6.0;
    MredGateway mred_gw(mred, KernelSettings{30, 0.01, 1});
    CHECK(replay_matches(mred_gw, 30, mred.minth, mred.maxth, mred.maxp,
                         mred.use_count_correction));
}
