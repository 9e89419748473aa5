#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splitsim {

struct ChannelConfig {
    double latency_s = 1e-4;       // one-way propagation delay
    double capacity_bps = 1e9;     // channel capacity
    double interface_bps = 1e9;    // sender interface rate
    double loss_rate = 0.0;        // per-transmission Bernoulli loss
};

enum class Protocol { TCP, UDP };
const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct TransportConfig {
    Protocol protocol = Protocol::TCP;
    int mtu_bytes = 1500;
    int window = 64;               // unacked packets in flight (TCP)
    double rto_multiplier = 2.0;   // timeout = multiplier * (2*latency + s_k)
    int max_retries = 16;          // per packet, before the frame fails
};

void validate(const ChannelConfig& channel);
void validate(const TransportConfig& transport);

double effective_rate_bps(const ChannelConfig& channel);

struct TraceEvent {
    double time_s = 0.0;
    const char* kind = "";         // send-complete | arrival | ack-arrival | timeout
    std::int64_t packet_seq = -1;
};

struct DeliveryReport {
    bool failed = false;           // TCP retries exhausted, or UDP delivered nothing
    double completion_s = 0.0;     // arrival time of the last delivered byte
    std::vector<std::uint8_t> delivered;  // one flag per payload byte
    std::int64_t packets_sent = 0;
    std::int64_t retransmissions = 0;
};

// Sends one frame of `payload_bytes` split into MTU-sized packets over a single
// serializing channel. Deterministic for a given seed: loss draws come from one
// generator, consumed in transmission order. Acks are never lost. TCP stops as
// soon as every byte has arrived or a packet exhausts its retries; UDP runs
// until every packet's fate is settled.
DeliveryReport transmit_frame(std::int64_t payload_bytes, const ChannelConfig& channel,
                              const TransportConfig& transport, std::uint64_t seed,
                              std::vector<TraceEvent>* trace = nullptr);

}  // namespace splitsim
