#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracle_netsim.hpp"
#include "splitsim/netsim.hpp"
#include "splitsim/rng.hpp"

using namespace splitsim;

namespace {

ChannelConfig channel(double latency_s, double rate_bps, double loss_rate) {
    ChannelConfig c;
    c.latency_s = latency_s;
    c.capacity_bps = rate_bps;
    c.interface_bps = rate_bps;
    c.loss_rate = loss_rate;
    return c;
}

TransportConfig transport(Protocol protocol, int mtu, int window = 64,
                          double rto_multiplier = 2.0, int max_retries = 16) {
    TransportConfig t;
    t.protocol = protocol;
    t.mtu_bytes = mtu;
    t.window = window;
    t.rto_multiplier = rto_multiplier;
    t.max_retries = max_retries;
    return t;
}

double ser_time(std::int64_t bytes, double rate_bps) {
    return static_cast<double>(bytes) * 8.0 / rate_bps;
}

}  // namespace

TEST_SUITE("netsim") {

TEST_CASE("lossless two-packet frame finishes at serialization plus one latency") {
    // 2500 B over a 100 Mbit/s link with MTU 1500: 120 us + 80 us + 20 us = 220 us
    const ChannelConfig ch = channel(2e-5, 1e8, 0.0);
    const TransportConfig tp = transport(Protocol::TCP, 1500);
    const DeliveryReport r = transmit_frame(2500, ch, tp, 1);

    CHECK_FALSE(r.failed);
    const double expect = (ser_time(1500, 1e8) + ser_time(1000, 1e8)) + 2e-5;
    CHECK(r.completion_s == expect);
    CHECK(r.completion_s == doctest::Approx(2.2e-4).epsilon(1e-12));
    CHECK(r.packets_sent == 2);
    CHECK(r.retransmissions == 0);
    CHECK(static_cast<std::int64_t>(r.delivered.size()) == 2500);
    CHECK(std::accumulate(r.delivered.begin(), r.delivered.end(), 0ll) == 2500);

    // the seed is irrelevant without loss
    CHECK(transmit_frame(2500, ch, tp, 99).completion_s == expect);
}

TEST_CASE("certain loss over UDP delivers nothing") {
    const DeliveryReport r = transmit_frame(4000, channel(1e-4, 1e8, 1.0),
                                            transport(Protocol::UDP, 1500), 7);
    CHECK(r.failed);
    CHECK(r.completion_s == 0.0);
    CHECK(r.packets_sent == 3);
    CHECK(r.retransmissions == 0);
    CHECK(std::accumulate(r.delivered.begin(), r.delivered.end(), 0ll) == 0);
}

TEST_CASE("certain loss over TCP exhausts the retry budget") {
    const ChannelConfig ch = channel(1e-4, 1e8, 1.0);
    const DeliveryReport one = transmit_frame(1000, ch, transport(Protocol::TCP, 1500), 3);
    CHECK(one.failed);
    CHECK(one.completion_s == 0.0);
    CHECK(one.packets_sent == 17);  // 1 first try + 16 retries
    CHECK(one.retransmissions == 16);
    CHECK(std::accumulate(one.delivered.begin(), one.delivered.end(), 0ll) == 0);

    const DeliveryReport three =
        transmit_frame(4500, ch, transport(Protocol::TCP, 1500, 64, 2.0, 2), 3);
    CHECK(three.failed);
    CHECK(std::accumulate(three.delivered.begin(), three.delivered.end(), 0ll) == 0);
}

TEST_CASE("a window of one serializes sends behind acks") {
    const double s = ser_time(1500, 1e8);
    const double L = 3e-4;
    const DeliveryReport r = transmit_frame(4500, channel(L, 1e8, 0.0),
                                            transport(Protocol::TCP, 1500, 1), 5);
    CHECK_FALSE(r.failed);
    // ack-gated pipeline: send, wait 2L for the ack, send the next
    const double expect = ((((((s + L) + L) + s) + L) + L) + s) + L;
    CHECK(r.completion_s == expect);
    CHECK(r.completion_s == doctest::Approx(3 * s + 5 * L).epsilon(1e-12));
    CHECK(r.packets_sent == 3);
    CHECK(r.retransmissions == 0);
}

TEST_CASE("UDP ignores the window and streams back to back") {
    const double s = ser_time(1500, 1e8);
    const DeliveryReport r = transmit_frame(4500, channel(3e-4, 1e8, 0.0),
                                            transport(Protocol::UDP, 1500, 1), 5);
    CHECK_FALSE(r.failed);
    CHECK(r.completion_s == ((s + s) + s) + 3e-4);
    CHECK(r.packets_sent == 3);
}

TEST_CASE("an early timeout retransmits but cannot delay completion") {
    // rto_multiplier 0.35 fires the timeout before the arrival: the packet is
    // sent again, yet completion is still the first arrival
    const double s = ser_time(100, 1e8);
    const double L = 1e-3;
    const DeliveryReport r = transmit_frame(100, channel(L, 1e8, 0.0),
                                            transport(Protocol::TCP, 1500, 64, 0.35), 11);
    CHECK_FALSE(r.failed);
    CHECK(r.completion_s == s + L);
    CHECK(r.packets_sent == 2);
    CHECK(r.retransmissions == 1);
}

TEST_CASE("loss-free TCP and UDP agree on timing") {
    const ChannelConfig ch = channel(1.3e-4, 5e7, 0.0);
    for (const std::int64_t payload : {1ll, 1500ll, 2500ll, 7301ll}) {
        const DeliveryReport tcp =
            transmit_frame(payload, ch, transport(Protocol::TCP, 1500), 1);
        const DeliveryReport udp =
            transmit_frame(payload, ch, transport(Protocol::UDP, 1500), 1);
        CHECK(tcp.completion_s == udp.completion_s);
        CHECK(tcp.packets_sent == udp.packets_sent);
        CHECK_FALSE(tcp.failed);
        CHECK_FALSE(udp.failed);
    }
}

TEST_CASE("partial UDP delivery flags exactly the arrived bytes") {
    // find a seed whose first draw loses packet 0 and keeps packet 1
    const double p = 0.5;
    std::uint64_t seed = 0;
    for (std::uint64_t cand = 1;; ++cand) {
        Rng rng(cand);
        const bool lost0 = rng.uniform() < p;
        const bool lost1 = rng.uniform() < p;
        if (lost0 && !lost1) {
            seed = cand;
            break;
        }
    }
    const ChannelConfig ch = channel(2e-5, 1e8, p);
    const DeliveryReport r = transmit_frame(2500, ch, transport(Protocol::UDP, 1500), seed);
    CHECK_FALSE(r.failed);
    for (std::int64_t i = 0; i < 1500; ++i) CHECK(r.delivered[static_cast<std::size_t>(i)] == 0);
    for (std::int64_t i = 1500; i < 2500; ++i)
        CHECK(r.delivered[static_cast<std::size_t>(i)] == 1);
    CHECK(r.completion_s == (ser_time(1500, 1e8) + ser_time(1000, 1e8)) + 2e-5);
}

TEST_CASE("lossy UDP never beats the lossless run and only drops bytes") {
    const ChannelConfig lossy = channel(1e-4, 1e8, 0.3);
    const ChannelConfig clean = channel(1e-4, 1e8, 0.0);
    const TransportConfig tp = transport(Protocol::UDP, 1500);
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const DeliveryReport r = transmit_frame(6000, lossy, tp, seed);
        const DeliveryReport r0 = transmit_frame(6000, clean, tp, seed);
        if (r.failed) {
            ++failures;
            continue;
        }
        CHECK(r.completion_s <= r0.completion_s);
        for (std::size_t i = 0; i < r.delivered.size(); ++i)
            if (r.delivered[i]) CHECK(r0.delivered[i] == 1);
    }
    CHECK(failures < 5);  // p^4 per frame; more would be a bug, not bad luck
}

TEST_CASE("reports are reproducible per seed and vary across seeds") {
    const ChannelConfig ch = channel(1e-4, 1e8, 0.5);
    const TransportConfig tp = transport(Protocol::TCP, 1000, 8, 1.5, 4);
    const DeliveryReport a = transmit_frame(3000, ch, tp, 42);
    const DeliveryReport b = transmit_frame(3000, ch, tp, 42);
    CHECK(a.failed == b.failed);
    CHECK(a.completion_s == b.completion_s);
    CHECK(a.delivered == b.delivered);
    CHECK(a.packets_sent == b.packets_sent);
    CHECK(a.retransmissions == b.retransmissions);

    bool any_differs = false;
    for (std::uint64_t seed = 43; seed < 53 && !any_differs; ++seed) {
        const DeliveryReport c = transmit_frame(3000, ch, tp, seed);
        any_differs = c.packets_sent != a.packets_sent || c.failed != a.failed ||
                      c.completion_s != a.completion_s;
    }
    CHECK(any_differs);
}

TEST_CASE("replay oracle reproduces seeded TCP runs exactly") {
    const double rate = 1e8;
    const ChannelConfig ch = channel(1.37e-4, rate, 0.45);
    const TransportConfig tp = transport(Protocol::TCP, 1000, 8, 1.61, 2);
    const std::int64_t payload = 2750;  // 1000 + 1000 + 750

    oracle::NetParams prm;
    prm.n = 3;
    prm.ser = {ser_time(1000, rate), ser_time(1000, rate), ser_time(750, rate)};
    prm.latency = ch.latency_s;
    prm.rto_multiplier = tp.rto_multiplier;
    prm.max_retries = tp.max_retries;
    prm.tcp = true;

    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        const DeliveryReport sim = transmit_frame(payload, ch, tp, seed);

        Rng rng(seed);
        std::vector<bool> losses;
        for (int i = 0; i < 64; ++i) losses.push_back(rng.uniform() < ch.loss_rate);
        const oracle::NetOutcome re = oracle::replay(prm, losses);

        REQUIRE_FALSE(re.needs_more_pattern);
        CHECK(sim.failed == re.failed);
        CHECK(sim.completion_s == re.completion);
        CHECK(sim.packets_sent == re.packets_sent);
        CHECK(sim.retransmissions == re.retransmissions);
        for (int k = 0; k < prm.n; ++k) {
            const std::int64_t first = static_cast<std::int64_t>(k) * tp.mtu_bytes;
            const std::int64_t count = k + 1 < prm.n ? tp.mtu_bytes : payload - first;
            for (std::int64_t i = first; i < first + count; ++i)
                CHECK(sim.delivered[static_cast<std::size_t>(i)] ==
                      re.delivered[static_cast<std::size_t>(k)]);
        }
        if (sim.failed) ++failures;
    }
    CHECK(failures > 0);  // the sweep must exercise both outcomes
    CHECK(failures < 300);
}

TEST_CASE("replay oracle reproduces seeded UDP runs exactly") {
    const double rate = 5e7;
    const ChannelConfig ch = channel(9e-5, rate, 0.35);
    const TransportConfig tp = transport(Protocol::UDP, 1200);
    const std::int64_t payload = 3100;  // 1200 + 1200 + 700

    oracle::NetParams prm;
    prm.n = 3;
    prm.ser = {ser_time(1200, rate), ser_time(1200, rate), ser_time(700, rate)};
    prm.latency = ch.latency_s;
    prm.tcp = false;

    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const DeliveryReport sim = transmit_frame(payload, ch, tp, seed);
        Rng rng(seed);
        std::vector<bool> losses;
        for (int i = 0; i < 3; ++i) losses.push_back(rng.uniform() < ch.loss_rate);
        const oracle::NetOutcome re = oracle::replay(prm, losses);
        CHECK(sim.failed == re.failed);
        CHECK(sim.completion_s == re.completion);
        CHECK(sim.packets_sent == re.packets_sent);
    }
}

TEST_CASE("outcome tree of a two-packet TCP frame closes to probability one") {
    oracle::NetParams prm;
    prm.n = 2;
    prm.ser = {1.2e-4, 8e-5};
    prm.latency = 1e-4;
    prm.rto_multiplier = 2.0;
    prm.max_retries = 2;
    prm.tcp = true;

    for (const double p : {0.25, 0.5}) {
        double total = 0.0;
        double fail_mass = 0.0;
        int leaves = 0;
        std::vector<bool> pattern;
        oracle::enumerate_outcomes(
            prm, pattern,
            [&](const std::vector<bool>& path, const oracle::NetOutcome& out, int lost) {
                const int kept = static_cast<int>(path.size()) - lost;
                const double prob = std::pow(p, lost) * std::pow(1.0 - p, kept);
                total += prob;
                if (out.failed) {
                    fail_mass += prob;
                    CHECK(out.completion == 0.0);
                } else {
                    CHECK(out.completion > 0.0);
                    CHECK(out.delivered == std::vector<std::uint8_t>{1, 1});
                }
                ++leaves;
            });
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(fail_mass > 0.0);
        CHECK(leaves > 4);
    }
}

TEST_CASE("single-packet failure rate matches the geometric tail") {
    // P(fail) = p^(retries+1): every attempt must be lost
    const double p = 0.5;
    const int retries = 3;
    const ChannelConfig ch = channel(1e-4, 1e8, p);
    const TransportConfig tp = transport(Protocol::TCP, 1500, 64, 2.0, retries);
    const int trials = 3000;
    int failures = 0;
    for (int i = 0; i < trials; ++i)
        if (transmit_frame(800, ch, tp, static_cast<std::uint64_t>(i)).failed) ++failures;
    const double expect = std::pow(p, retries + 1);
    const double sigma = std::sqrt(expect * (1.0 - expect) / trials);
    CHECK(std::abs(static_cast<double>(failures) / trials - expect) < 3.0 * sigma);
}

TEST_CASE("trace records the event sequence") {
    const double s = ser_time(1000, 1e8);
    std::vector<TraceEvent> trace;
    const DeliveryReport r = transmit_frame(1000, channel(1e-4, 1e8, 0.0),
                                            transport(Protocol::TCP, 1500), 1, &trace);
    CHECK_FALSE(r.failed);
    REQUIRE(trace.size() == 2);
    CHECK(std::string(trace[0].kind) == "send-complete");
    CHECK(trace[0].time_s == s);
    CHECK(trace[0].packet_seq == 0);
    CHECK(std::string(trace[1].kind) == "arrival");
    CHECK(trace[1].time_s == s + 1e-4);

    trace.clear();
    transmit_frame(3000, channel(1e-4, 1e8, 1.0), transport(Protocol::UDP, 1500), 1, &trace);
    REQUIRE(trace.size() == 2);  // two send-completes, nothing arrives
    CHECK(std::string(trace[0].kind) == "send-complete");
    CHECK(std::string(trace[1].kind) == "send-complete");
    CHECK(trace[1].packet_seq == 1);
}

TEST_CASE("packetization boundaries") {
    const ChannelConfig ch = channel(1e-4, 1e8, 0.0);
    CHECK(transmit_frame(1, ch, transport(Protocol::UDP, 1500), 1).packets_sent == 1);
    CHECK(transmit_frame(1500, ch, transport(Protocol::UDP, 1500), 1).packets_sent == 1);
    CHECK(transmit_frame(1501, ch, transport(Protocol::UDP, 1500), 1).packets_sent == 2);
    CHECK(transmit_frame(3000, ch, transport(Protocol::UDP, 1500), 1).packets_sent == 2);
    // one full byte budget per packet at mtu 1
    CHECK(transmit_frame(5, ch, transport(Protocol::UDP, 1), 1).packets_sent == 5);
}

TEST_CASE("the effective rate is the lesser of capacity and interface") {
    ChannelConfig ch;
    ch.capacity_bps = 1e9;
    ch.interface_bps = 1e8;
    CHECK(effective_rate_bps(ch) == 1e8);
    ch.interface_bps = 4e9;
    CHECK(effective_rate_bps(ch) == 1e9);

    // a slower interface stretches serialization
    const DeliveryReport r = transmit_frame(1000, channel(0.0, 1e8, 0.0),
                                            transport(Protocol::UDP, 1500), 1);
    ChannelConfig slow = channel(0.0, 1e8, 0.0);
    slow.interface_bps = 1e7;
    const DeliveryReport rs = transmit_frame(1000, slow, transport(Protocol::UDP, 1500), 1);
    CHECK(rs.completion_s == doctest::Approx(10.0 * r.completion_s).epsilon(1e-12));
}

TEST_CASE("protocol names round-trip") {
    CHECK(std::string(to_string(Protocol::TCP)) == "tcp");
    CHECK(std::string(to_string(Protocol::UDP)) == "udp");
    CHECK(protocol_from_string("tcp") == Protocol::TCP);
    CHECK(protocol_from_string("UDP") == Protocol::UDP);
    CHECK_THROWS_WITH_AS(static_cast<void>(protocol_from_string("quic")),
                         doctest::Contains("unknown protocol"), std::invalid_argument);
}

TEST_CASE("configuration validation names the offending field") {
    const ChannelConfig ch = channel(1e-4, 1e8, 0.0);
    const TransportConfig tp = transport(Protocol::TCP, 1500);

    const auto fails_with = [&](const ChannelConfig& c, const TransportConfig& t,
                                std::int64_t payload, const std::string& needle) {
        CHECK_THROWS_WITH_AS(static_cast<void>(transmit_frame(payload, c, t, 1)),
                             doctest::Contains(needle.c_str()), std::invalid_argument);
    };

    ChannelConfig bad = ch;
    bad.latency_s = -1.0;
    fails_with(bad, tp, 100, "latency_s");
    bad = ch;
    bad.capacity_bps = 0.0;
    fails_with(bad, tp, 100, "capacity_bps");
    bad = ch;
    bad.interface_bps = -5.0;
    fails_with(bad, tp, 100, "interface_bps");
    bad = ch;
    bad.loss_rate = 1.5;
    fails_with(bad, tp, 100, "loss_rate");
    bad = ch;
    bad.loss_rate = std::nan("");
    fails_with(bad, tp, 100, "loss_rate");

    TransportConfig badt = tp;
    badt.mtu_bytes = 0;
    fails_with(ch, badt, 100, "mtu_bytes");
    badt = tp;
    badt.window = 0;
    fails_with(ch, badt, 100, "window");
    badt = tp;
    badt.rto_multiplier = 0.0;
    fails_with(ch, badt, 100, "rto_multiplier");
    badt = tp;
    badt.max_retries = -1;
    fails_with(ch, badt, 100, "max_retries");

    fails_with(ch, tp, 0, "payload_bytes");
    fails_with(ch, tp, -10, "payload_bytes");
}

}  // TEST_SUITE
