#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfn/meanfield.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Per-recipient negotiation message: the sender's own action, the action it
// proposes for the recipient, its rollout reward and one mean-field record.
// The encoded size depends only on the state dimension.
struct NegotiationMessage {
  AgentId sender;
  AgentId receiver;
  std::uint32_t round = 0;
  Urgency urgency = Urgency::Normal;
  Action sender_action = 0.0;
  std::optional<Action> proposed_for_receiver;
  double rollout_reward = 0.0;
  MeanFieldStats stats;
};

// Little-endian fixed layout:
//   u32 dimension | u64 count | f64 total_weight | f64 mean[dimension] | f64 variance[dimension]
std::vector<std::byte> encode_stats(const MeanFieldStats& stats, std::size_t dimension);
MeanFieldStats decode_stats(std::span<const std::byte> bytes, std::size_t* consumed = nullptr);
std::size_t stats_wire_size(std::size_t dimension) noexcept;

// u32 sender | u32 receiver | u32 round | u8 urgency | u8 has_proposal |
// f64 sender_action | f64 proposed_for_receiver | f64 rollout_reward | stats record
std::vector<std::byte> encode_message(const NegotiationMessage& msg, std::size_t dimension);
NegotiationMessage decode_message(std::span<const std::byte> bytes);
std::size_t message_wire_size(std::size_t dimension) noexcept;

}  // namespace mfn
