#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "admission.hpp"
#include "qoe_metrics.hpp"

#include <cmath>
#include <string>

using namespace vqsim;

TEST_CASE("monitor reports the windowed byte rate") {
    LinkMonitor mon(1'000'000'000);
    CHECK(mon.rate_bps(0) == 0.0);

    // 875,000 B inside one second is exactly the 7 Mbps line rate.
    for (int i = 0; i < 1000; ++i) mon.observe(i * 1'000'000, 875);
    CHECK(mon.rate_bps(999'999'999) == doctest::Approx(7e6).epsilon(1e-9));
}

TEST_CASE("monitor evicts samples as they age out of the window") {
    LinkMonitor mon(1'000'000'000);
    mon.observe(0, 125); // 1000 bits
    CHECK(mon.rate_bps(500'000'000) == doctest::Approx(1000.0));
    CHECK(mon.rate_bps(999'999'999) == doctest::Approx(1000.0));
    // The window is (now - W, now]: a sample exactly one window old is gone.
    CHECK(mon.rate_bps(1'000'000'000) == 0.0);

    mon.observe(2'000'000'000, 250);
    mon.observe(2'500'000'000, 250);
    CHECK(mon.rate_bps(2'600'000'000) == doctest::Approx(4000.0));
    CHECK(mon.rate_bps(3'100'000'000) == doctest::Approx(2000.0));
    CHECK(mon.rate_bps(4'000'000'000) == 0.0);
}

TEST_CASE("always_admit takes everything, session cap included") {
    AdmissionPolicy pol;
    pol.gate = AdmissionGate::always_admit;
    ContentParams c;
    MosCurve curve;

    auto d = decide(pol, 1e9, 24, c, curve);
    CHECK(d.admit);
    CHECK(d.reason == RejectReason::none);
}

TEST_CASE("gated policies refuse past the session cap before any measurement") {
    ContentParams c;
    MosCurve curve;
    for (auto gate : {AdmissionGate::bandwidth_check, AdmissionGate::qoe_aware}) {
        AdmissionPolicy pol;
        pol.gate = gate;
        auto d = decide(pol, 0.0, 24, c, curve);
        CHECK_FALSE(d.admit);
        CHECK(d.reason == RejectReason::session_cap);

        auto ok = decide(pol, 0.0, 23, c, curve);
        CHECK(ok.admit);
    }
}

TEST_CASE("bandwidth gate reserves one top-quality stream of headroom") {
    AdmissionPolicy pol;
    pol.gate = AdmissionGate::bandwidth_check;
    ContentParams c;
    MosCurve curve;

    // 7e6 - 420k = 6.58 Mbps is the highest admissible measurement.
    CHECK(decide(pol, 6'580'000.0, 0, c, curve).admit);
    auto d = decide(pol, 6'580'000.1, 0, c, curve);
    CHECK_FALSE(d.admit);
    CHECK(d.reason == RejectReason::capacity);
    CHECK_FALSE(decide(pol, 6'700'000.0, 0, c, curve).admit);
}

TEST_CASE("qoe gate scores the residual share of the budget") {
    AdmissionPolicy pol;
    pol.gate = AdmissionGate::qoe_aware;
    ContentParams c;
    MosCurve curve;

    SUBCASE("an idle link admits at full quality") {
        auto d = decide(pol, 0.0, 0, c, curve);
        CHECK(d.admit);
        CHECK(d.residual_bps == doctest::Approx(6.3e6));
        CHECK(d.predicted_mos == doctest::Approx(5.0));
        CHECK(d.recommended_q == 2);
    }

    SUBCASE("a small positive residual predicts below the bar") {
        // residual = 6.3e6 - 6.25e6 = 50 kbps; mos(50k) = 2.697 < 3.5.
        auto d = decide(pol, 6'250'000.0, 0, c, curve);
        CHECK_FALSE(d.admit);
        CHECK(d.reason == RejectReason::qoe_below_threshold);
        CHECK(d.residual_bps == doctest::Approx(50'000.0));
        double want = 1.0 + 4.0 * std::log(5.0 / 3.0) / std::log(10.0 / 3.0);
        CHECK(d.predicted_mos == doctest::Approx(want).epsilon(1e-9));
        CHECK(d.recommended_q == 31); // even the ladder floor does not fit 50k
    }

    SUBCASE("a spent budget rejects for capacity") {
        auto d = decide(pol, 6'310'000.0, 0, c, curve);
        CHECK_FALSE(d.admit);
        CHECK(d.reason == RejectReason::capacity);
        CHECK(d.residual_bps < 0.0);
    }

    SUBCASE("decision threshold sits at the theta-scoring residual") {
        // mos(r) = 3.5 at r = 30000 * (10/3)^(2.5/4) = 63,667.4 bps, so the
        // highest admissible measurement is 6.3e6 minus that.
        double r_theta = 30'000.0 * std::pow(10.0 / 3.0, 2.5 / 4.0);
        double edge = 6.3e6 - r_theta;
        CHECK(decide(pol, edge - 1.0, 0, c, curve).admit);
        CHECK_FALSE(decide(pol, edge + 1.0, 0, c, curve).admit);
    }

    SUBCASE("recommended quantizer fits the residual") {
        // residual = 70 kbps lands between the q=21 and q=22 rates.
        auto d = decide(pol, 6'230'000.0, 0, c, curve);
        CHECK(d.admit); // mos(70k) = 3.815
        CHECK(d.recommended_q == 22);
        CHECK(nominal_rate_bps(c, d.recommended_q) <= d.residual_bps);
        CHECK(nominal_rate_bps(c, d.recommended_q - 1) > d.residual_bps);
    }
}

TEST_CASE("decisions are pure functions of their inputs") {
    AdmissionPolicy pol;
    pol.gate = AdmissionGate::qoe_aware;
    ContentParams c;
    MosCurve curve;
    for (double m : {0.0, 3.2e6, 5.9e6, 6.25e6, 6.4e6, 8.0e6}) {
        auto a = decide(pol, m, 5, c, curve);
        auto b = decide(pol, m, 5, c, curve);
        CHECK(a.admit == b.admit);
        CHECK(a.reason == b.reason);
        CHECK(a.measured_bps == b.measured_bps);
        CHECK(a.residual_bps == b.residual_bps);
        CHECK(a.predicted_mos == b.predicted_mos);
        CHECK(a.recommended_q == b.recommended_q);
    }
}

TEST_CASE("both gates are monotone in the measured load, and qoe is the stricter") {
    ContentParams c;
    MosCurve curve;
    AdmissionPolicy bw;
    bw.gate = AdmissionGate::bandwidth_check;
    AdmissionPolicy qoe;
    qoe.gate = AdmissionGate::qoe_aware;

    bool prev_bw = true, prev_qoe = true;
    for (double m = 0.0; m <= 8e6; m += 10'000.0) {
        bool a_bw = decide(bw, m, 0, c, curve).admit;
        bool a_qoe = decide(qoe, m, 0, c, curve).admit;
        // Once a gate starts rejecting it never admits a higher load.
        CHECK(a_bw <= prev_bw);
        CHECK(a_qoe <= prev_qoe);
        // At beta 0.9 / theta 3.5 the qoe gate rejects earlier.
        CHECK(a_qoe <= a_bw);
        prev_bw = a_bw;
        prev_qoe = a_qoe;
    }
}

TEST_CASE("reject reasons have stable names") {
    CHECK(std::string(reject_reason_name(RejectReason::none)) == "none");
    CHECK(std::string(reject_reason_name(RejectReason::capacity)) == "capacity");
    CHECK(std::string(reject_reason_name(RejectReason::qoe_below_threshold)) ==
          "qoe_below_threshold");
    CHECK(std::string(reject_reason_name(RejectReason::session_cap)) == "session_cap");
}
