#include "splitsim/netsim.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

const char* to_string(Protocol p) { return p == Protocol::TCP ? "tcp" : "udp"; }

Protocol protocol_from_string(const std::string& s) {
    if (s == "tcp" || s == "TCP") return Protocol::TCP;
    if (s == "udp" || s == "UDP") return Protocol::UDP;
    throw std::invalid_argument("unknown protocol \"" + s + "\"");
}

void validate(const ChannelConfig& c) {
    if (!(c.latency_s >= 0.0)) throw std::invalid_argument("latency_s must be >= 0");
    if (!(c.capacity_bps > 0.0)) throw std::invalid_argument("capacity_bps must be > 0");
    if (!(c.interface_bps > 0.0)) throw std::invalid_argument("interface_bps must be > 0");
    if (!(c.loss_rate >= 0.0) || !(c.loss_rate <= 1.0))
        throw std::invalid_argument("loss_rate must be in [0, 1]");
}

void validate(const TransportConfig& t) {
    if (t.mtu_bytes < 1) throw std::invalid_argument("mtu_bytes must be >= 1");
    if (t.window < 1) throw std::invalid_argument("window must be >= 1");
    if (!(t.rto_multiplier > 0.0))
        throw std::invalid_argument("rto_multiplier must be > 0");
    if (t.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
}

double effective_rate_bps(const ChannelConfig& channel) {
    return std::min(channel.capacity_bps, channel.interface_bps);
}

namespace {

enum class EvKind { SendComplete, Arrival, AckArrival, Timeout };

const char* kind_name(EvKind k) {
    switch (k) {
        case EvKind::SendComplete: return "send-complete";
        case EvKind::Arrival: return "arrival";
        case EvKind::AckArrival: return "ack-arrival";
        case EvKind::Timeout: return "timeout";
    }
    return "?";
}

struct Event {
    double time_s;
    std::int64_t ordinal;  // breaks same-instant ties in schedule order
    EvKind kind;
    int packet;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time_s != b.time_s) return a.time_s > b.time_s;
        return a.ordinal > b.ordinal;
    }
};

}  // namespace

DeliveryReport transmit_frame(std::int64_t payload_bytes, const ChannelConfig& channel,
                              const TransportConfig& transport, std::uint64_t seed,
                              std::vector<TraceEvent>* trace) {
    validate(channel);
    validate(transport);
    if (payload_bytes < 1) throw std::invalid_argument("payload_bytes must be >= 1");

    const bool tcp = transport.protocol == Protocol::TCP;
    const double rate = effective_rate_bps(channel);
    const double latency = channel.latency_s;
    const int n = static_cast<int>((payload_bytes + transport.mtu_bytes - 1) /
                                   transport.mtu_bytes);

    // per-packet serialization time
    std::vector<double> ser(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const std::int64_t bytes =
            k + 1 < n ? transport.mtu_bytes
                      : payload_bytes - static_cast<std::int64_t>(n - 1) * transport.mtu_bytes;
        ser[static_cast<std::size_t>(k)] = static_cast<double>(bytes) * 8.0 / rate;
    }

    DeliveryReport report;
    report.delivered.assign(static_cast<std::size_t>(payload_bytes), 0);

    Rng rng(seed);
    std::priority_queue<Event, std::vector<Event>, EventLater> events;
    std::int64_t ordinal = 0;
    auto schedule = [&](double t, EvKind kind, int pkt) {
        events.push(Event{t, ordinal++, kind, pkt});
    };

    std::vector<std::uint8_t> delivered_pkt(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> acked(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> sent_once(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> in_slot(static_cast<std::size_t>(n), 0);
    std::vector<int> retries_used(static_cast<std::size_t>(n), 0);
    std::deque<int> fresh, retx;
    for (int k = 0; k < n; ++k) fresh.push_back(k);
    int occupancy = 0;
    int delivered_count = 0;
    double last_arrival = 0.0;
    bool sender_busy = false;
    bool done = false;

    // Retransmissions go first: they already hold a window slot, so they can
    // never deadlock behind a blocked fresh packet.
    auto try_start = [&](double now) {
        if (sender_busy || done) return;
        int k;
        if (!retx.empty()) {
            k = retx.front();
            retx.pop_front();
        } else if (!fresh.empty()) {
            k = fresh.front();
            if (tcp && occupancy == transport.window) return;
            fresh.pop_front();
            if (tcp) {
                in_slot[static_cast<std::size_t>(k)] = 1;
                ++occupancy;
            }
        } else {
            return;
        }
        sender_busy = true;
        schedule(now + ser[static_cast<std::size_t>(k)], EvKind::SendComplete, k);
    };

    try_start(0.0);

    while (!done && !events.empty()) {
        const Event ev = events.top();
        events.pop();
        if (trace) trace->push_back({ev.time_s, kind_name(ev.kind), ev.packet});
        const std::size_t k = static_cast<std::size_t>(ev.packet);
        switch (ev.kind) {
            case EvKind::SendComplete: {
                ++report.packets_sent;
                if (sent_once[k]) ++report.retransmissions;
                sent_once[k] = 1;
                sender_busy = false;
                const bool lost = rng.uniform() < channel.loss_rate;
                if (!lost) schedule(ev.time_s + latency, EvKind::Arrival, ev.packet);
                if (tcp)
                    schedule(ev.time_s + transport.rto_multiplier * (2.0 * latency + ser[k]),
                             EvKind::Timeout, ev.packet);
                try_start(ev.time_s);
                break;
            }
            case EvKind::Arrival: {
                if (!delivered_pkt[k]) {
                    delivered_pkt[k] = 1;
                    ++delivered_count;
                    const std::int64_t first = static_cast<std::int64_t>(k) *
                                               transport.mtu_bytes;
                    const std::int64_t count =
                        ev.packet + 1 < n
                            ? transport.mtu_bytes
                            : payload_bytes - static_cast<std::int64_t>(n - 1) *
                                                  transport.mtu_bytes;
                    std::fill(report.delivered.begin() + first,
                              report.delivered.begin() + first + count,
                              static_cast<std::uint8_t>(1));
                    last_arrival = std::max(last_arrival, ev.time_s);
                }
                if (tcp) {
                    schedule(ev.time_s + latency, EvKind::AckArrival, ev.packet);
                    if (delivered_count == n) {
                        report.completion_s = ev.time_s;
                        done = true;
                    }
                }
                break;
            }
            case EvKind::AckArrival: {
                if (!acked[k]) {
                    acked[k] = 1;
                    if (in_slot[k]) {
                        in_slot[k] = 0;
                        --occupancy;
                    }
                }
                try_start(ev.time_s);
                break;
            }
            case EvKind::Timeout: {
                if (acked[k]) break;  // stale: the ack won the race
                if (retries_used[k] == transport.max_retries) {
                    report.failed = true;
                    done = true;
                    break;
                }
                ++retries_used[k];
                retx.push_back(ev.packet);
                try_start(ev.time_s);
                break;
            }
        }
    }

    if (!tcp) {
        // every send and arrival has been drained; the frame completes with the
        // last byte that made it, and fails only if nothing did
        if (delivered_count == 0)
            report.failed = true;
        else
            report.completion_s = last_arrival;
    }
    return report;
}

}  // namespace splitsim
