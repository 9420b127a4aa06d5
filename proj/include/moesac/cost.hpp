#pragma once

#include <cmath>
#include <cstdint>

#include "moesac/errors.hpp"
#include "moesac/scenario.hpp"

namespace moesac {

// Energy and airtime of one transfer over one channel.
// Invariant: energy_j == tx_power_w * duration_s of the producing channel.
struct CommCost {
  double energy_j = 0.0;
  double duration_s = 0.0;

  friend CommCost operator+(CommCost a, CommCost b) {
    return {a.energy_j + b.energy_j, a.duration_s + b.duration_s};
  }
};

// Shannon rate in bits/s: B * log2(1 + SNR).
inline double transmission_rate(const ChannelState& channel) {
  return channel.bandwidth_hz * std::log2(1.0 + channel.snr_linear);
}

inline CommCost transfer_energy(const ChannelState& channel,
                                std::int64_t payload_bits) {
  const double rate = transmission_rate(channel);
  if (rate <= 0.0)
    throw InfeasibleChannel("transfer_energy: zero transmission rate");
  CommCost cost;
  cost.duration_s = static_cast<double>(payload_bits) / rate;
  cost.energy_j = channel.tx_power_w * cost.duration_s;
  return cost;
}

// Downlink prompt plus uplink generated output, same channel both ways.
inline CommCost round_trip_energy(const ChannelState& channel,
                                  const Subtask& subtask) {
  return transfer_energy(channel, subtask.prompt_bits) +
         transfer_energy(channel, subtask.output_bits);
}

// Compute cost is linear in the generated bits.
inline double compute_cost(std::int64_t output_bits, double kappa_c) {
  return kappa_c * static_cast<double>(output_bits);
}

}  // namespace moesac
