#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adaptation.hpp"
#include "video_traffic.hpp"

#include <cmath>
#include <deque>

using namespace vqsim;

namespace {

// Long-double recomputation of the throughput equation, kept separate from
// the production code path.
long double tfrc_oracle(long double s_bytes, long double rtt, long double p) {
    long double t_rto = 4.0L * rtt;
    long double denom = rtt * std::sqrt(2.0L * p / 3.0L) +
                        t_rto * 3.0L * std::sqrt(3.0L * p / 8.0L) * p * (1.0L + 32.0L * p * p);
    return 8.0L * s_bytes / denom;
}

} // namespace

TEST_CASE("throughput equation matches a long-double oracle") {
    for (double p : {1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3}) {
        for (double rtt : {0.024, 0.1, 0.5, 2.0}) {
            double got = tfrc_equation_bps(1052, rtt, p);
            double want = static_cast<double>(tfrc_oracle(1052.0L, rtt, p));
            CHECK(got == doctest::Approx(want).epsilon(1e-6));
        }
    }
    // Spot value: 1052 B segments, 100 ms RTT, 1% loss is just under 1 Mbps.
    CHECK(tfrc_equation_bps(1052, 0.1, 0.01) == doctest::Approx(945'388.0).epsilon(1e-4));
}

TEST_CASE("throughput equation is strictly decreasing in loss and in rtt") {
    double prev = tfrc_equation_bps(1052, 0.1, 1e-5);
    for (double p = 1e-4; p < 0.5; p *= 1.6) {
        double x = tfrc_equation_bps(1052, 0.1, p);
        CHECK(x < prev);
        prev = x;
    }
    CHECK(tfrc_equation_bps(1052, 0.2, 0.01) < tfrc_equation_bps(1052, 0.1, 0.01));
}

TEST_CASE("weighted loss average uses the fixed eight-slot window") {
    // Weight vector 1,1,1,1,.8,.6,.4,.2 sums to 6; missing slots count as 0.
    CHECK(weighted_loss_average({}) == 0.0);
    CHECK(weighted_loss_average({0.25}) == doctest::Approx(0.25 / 6.0).epsilon(1e-12));
    CHECK(weighted_loss_average({1.0}) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    std::deque<double> uniform(8, 0.1);
    CHECK(weighted_loss_average(uniform) == doctest::Approx(0.1).epsilon(1e-12));

    // Fifth-most-recent slot carries weight 0.8.
    CHECK(weighted_loss_average({0, 0, 0, 0, 1.0, 0, 0, 0}) ==
          doctest::Approx(0.8 / 6.0).epsilon(1e-12));

    // A ninth value has fallen out of the window entirely.
    std::deque<double> nine(9, 0.0);
    nine[8] = 1.0;
    CHECK(weighted_loss_average(nine) == 0.0);
}

TEST_CASE("receiver accounting derives expected counts from sequence gaps") {
    ReceiverState rs(3);
    rs.on_packet(1, 100, 5'000'000, 1052);
    rs.on_packet(2, 200, 6'000'000, 1052);
    rs.on_packet(4, 400, 8'000'000, 980);

    auto rep = rs.make_report(1'000'000'000, 1.0);
    REQUIRE(rep.has_value());
    CHECK(rep->session_id == 3);
    CHECK(rep->received == 3);
    CHECK(rep->expected == 4); // seq 3 never arrived
    CHECK(rep->loss_fraction == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(rep->loss_event_rate == doctest::Approx(0.25 / 6.0).epsilon(1e-12));
    CHECK(rep->recv_rate_bps == doctest::Approx((2 * 1052 + 980) * 8.0).epsilon(1e-12));
    CHECK(rep->echo_t_sent_ns == 400);
    CHECK(rep->echo_hold_ns == 1'000'000'000 - 8'000'000);

    // Nothing arrived: no report, and the loss history does not grow.
    CHECK_FALSE(rs.make_report(2'000'000'000, 1.0).has_value());

    // The late seq 3 arrives next interval: expected = max(gap, received).
    rs.on_packet(3, 300, 2'100'000'000, 1052);
    rs.on_packet(5, 500, 2'200'000'000, 1052);
    auto rep2 = rs.make_report(3'000'000'000, 1.0);
    REQUIRE(rep2.has_value());
    CHECK(rep2->received == 2);
    CHECK(rep2->expected == 2); // max_seq moved 4 -> 5, but 2 packets landed
    CHECK(rep2->loss_fraction == 0.0);
    // History is now [0, 0.25]: second slot still carries weight 1.
    CHECK(rep2->loss_event_rate == doctest::Approx(0.25 / 6.0).epsilon(1e-12));
}

TEST_CASE("select_quantizer picks the smallest level that fits") {
    ContentParams c;
    CHECK(select_quantizer(420'000.0, c) == 2);
    CHECK(select_quantizer(1e9, c) == 2);
    CHECK(select_quantizer(0.0, c) == 31);
    CHECK(select_quantizer(-1.0, c) == 31);

    double r17 = nominal_rate_bps(c, 17);
    CHECK(select_quantizer(r17, c) == 17);       // exact fit admits the level
    CHECK(select_quantizer(r17 - 1.0, c) == 18); // just under forces the next
    for (int q = kQuantMin; q <= kQuantMax; ++q)
        CHECK(select_quantizer(nominal_rate_bps(c, q), c) == q);
}

TEST_CASE("clean reports double the allowed rate up to the top of the ladder") {
    ContentParams c;
    AdaptationState st(c, 31, 24'000'000);
    CHECK(st.allowed_rate_bps() == doctest::Approx(nominal_rate_bps(c, 31)));

    ReceiverReport rep;
    rep.interval_end_ns = 1'000'000'000;
    rep.loss_fraction = 0.0;
    CHECK(st.on_report(rep));
    CHECK(st.allowed_rate_bps() ==
          doctest::Approx(2.0 * nominal_rate_bps(c, 31)).epsilon(1e-12));
    // 2 * 53.7k = 107.5k sits between the q=13 and q=12 rates.
    CHECK(st.pending_q() == 13);
    CHECK(nominal_rate_bps(c, st.pending_q()) <= st.allowed_rate_bps());
    CHECK(nominal_rate_bps(c, st.pending_q() - 1) > st.allowed_rate_bps());

    // Keep doubling: the cap is the q=2 nominal rate.
    for (int i = 0; i < 10; ++i) {
        rep.interval_end_ns += 1'000'000'000;
        st.on_report(rep);
    }
    CHECK(st.allowed_rate_bps() == doctest::Approx(420'000.0).epsilon(1e-12));
    CHECK(st.pending_q() == 2);
}

TEST_CASE("lossy reports drop the allowed rate to the equation value") {
    ContentParams c;
    AdaptationState st(c, 2, 24'000'000);

    // Three straight intervals at 50% loss fill slots of weight 1,1,1.
    ReceiverReport rep;
    rep.loss_fraction = 0.5;
    for (std::int64_t i = 1; i <= 3; ++i) {
        rep.interval_end_ns = i * 1'000'000'000;
        CHECK(st.on_report(rep));
    }

    double p = 0.5 * 3.0 / 6.0;
    CHECK(st.loss_event_rate() == doctest::Approx(p).epsilon(1e-12));
    double want = tfrc_equation_bps(1052, 0.024, p);
    CHECK(st.allowed_rate_bps() == doctest::Approx(want).epsilon(1e-9));
    CHECK(st.pending_q() == select_quantizer(want, c));
    CHECK(st.pending_q() > 2);
    // Staged, not applied.
    CHECK(st.current_q() == 2);
    st.apply_pending();
    CHECK(st.current_q() == st.pending_q());
}

TEST_CASE("rtt smoothing is a gain-1/8 EWMA from the initial value") {
    ContentParams c;
    AdaptationState st(c, 2, 24'000'000);
    CHECK(st.smoothed_rtt_s() == doctest::Approx(0.024).epsilon(1e-12));

    ReceiverReport rep;
    rep.interval_end_ns = 1'000'000'000;
    rep.rtt_sample_ns = 100'000'000;
    CHECK(st.on_report(rep));
    // 24 + (100 - 24)/8 = 33.5 ms: the first sample blends, it does not
    // replace.
    CHECK(st.smoothed_rtt_s() == doctest::Approx(0.0335).epsilon(1e-9));

    rep.interval_end_ns = 2'000'000'000;
    rep.rtt_sample_ns = 0; // no sample this interval: estimate unchanged
    st.on_report(rep);
    CHECK(st.smoothed_rtt_s() == doctest::Approx(0.0335).epsilon(1e-9));
}

TEST_CASE("stale or duplicate reports are ignored") {
    ContentParams c;
    AdaptationState st(c, 2, 24'000'000);

    ReceiverReport rep;
    rep.interval_end_ns = 5'000'000'000;
    rep.loss_fraction = 0.5;
    CHECK(st.on_report(rep));
    double after_first = st.allowed_rate_bps();

    CHECK_FALSE(st.on_report(rep)); // duplicate
    rep.interval_end_ns = 4'000'000'000;
    CHECK_FALSE(st.on_report(rep)); // older
    CHECK(st.allowed_rate_bps() == after_first);
}

TEST_CASE("aimd controller steps the quantizer multiplicatively up, additively down") {
    ContentParams c;
    AdaptationState st(c, 8, 24'000'000, RateController::aimd);

    ReceiverReport lossy;
    lossy.interval_end_ns = 1'000'000'000;
    lossy.loss_fraction = 0.1;
    st.on_report(lossy);
    CHECK(st.pending_q() == 10); // 8 * 1.25
    CHECK(st.allowed_rate_bps() == doctest::Approx(nominal_rate_bps(c, 10)));
    st.apply_pending();

    ReceiverReport clean;
    clean.interval_end_ns = 2'000'000'000;
    clean.loss_fraction = 0.0;
    st.on_report(clean);
    CHECK(st.pending_q() == 9); // one step back toward quality

    // Clamps at both ends of the ladder.
    AdaptationState top(c, 2, 24'000'000, RateController::aimd);
    clean.interval_end_ns = 1'000'000'000;
    top.on_report(clean);
    CHECK(top.pending_q() == 2);

    AdaptationState bottom(c, 31, 24'000'000, RateController::aimd);
    lossy.interval_end_ns = 1'000'000'000;
    bottom.on_report(lossy);
    CHECK(bottom.pending_q() == 31);
}
