#include "mfn/wire.hpp"

#include <bit>
#include <cstring>

#include "mfn/errors.hpp"

namespace mfn {

namespace {

static_assert(std::endian::native == std::endian::little, "wire encoding assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::byte*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  std::vector<std::byte> take() { return std::move(out_); }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw Error(ErrorCode::WireFormat, "record truncated");
    T value;
    std::memcpy(&value, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t position() const noexcept { return pos_; }
  std::span<const std::byte> rest() const noexcept { return in_.subspan(pos_); }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kMessageHeader = 4 + 4 + 4 + 1 + 1 + 8 + 8 + 8;

void put_stats(Writer& w, const MeanFieldStats& stats, std::size_t dimension) {
  if (!stats.empty() && stats.dimension() != dimension) {
    throw Error(ErrorCode::DimensionMismatch, "stats dimension differs from wire dimension");
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dimension));
  w.put<std::uint64_t>(stats.count);
  w.put<double>(stats.total_weight);
  for (std::size_t c = 0; c < dimension; ++c) w.put<double>(stats.empty() ? 0.0 : stats.mean[c]);
  for (std::size_t c = 0; c < dimension; ++c) w.put<double>(stats.empty() ? 0.0 : stats.variance[c]);
}

MeanFieldStats get_stats(Reader& r) {
  const auto dimension = r.get<std::uint32_t>();
  MeanFieldStats s = MeanFieldStats::empty_of(dimension);
  s.count = r.get<std::uint64_t>();
  s.total_weight = r.get<double>();
  for (auto& m : s.mean) m = r.get<double>();
  for (auto& v : s.variance) v = r.get<double>();
  if (s.count == 0) return MeanFieldStats{};
  return s;
}

}  // namespace

std::size_t stats_wire_size(std::size_t dimension) noexcept { return 4 + 8 + 8 + 16 * dimension; }

std::size_t message_wire_size(std::size_t dimension) noexcept { return kMessageHeader + stats_wire_size(dimension); }

std::vector<std::byte> encode_stats(const MeanFieldStats& stats, std::size_t dimension) {
  Writer w(stats_wire_size(dimension));
  put_stats(w, stats, dimension);
  return w.take();
}

MeanFieldStats decode_stats(std::span<const std::byte> bytes, std::size_t* consumed) {
  Reader r(bytes);
  auto s = get_stats(r);
  if (consumed) *consumed = r.position();
  return s;
}

std::vector<std::byte> encode_message(const NegotiationMessage& msg, std::size_t dimension) {
  Writer w(message_wire_size(dimension));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(msg.sender.index));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(msg.receiver.index));
  w.put<std::uint32_t>(msg.round);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(msg.urgency));
  w.put<std::uint8_t>(msg.proposed_for_receiver ? 1 : 0);
  w.put<double>(msg.sender_action);
  w.put<double>(msg.proposed_for_receiver.value_or(0.0));
  w.put<double>(msg.rollout_reward);
  put_stats(w, msg.stats, dimension);
  return w.take();
}

NegotiationMessage decode_message(std::span<const std::byte> bytes) {
  Reader r(bytes);
  NegotiationMessage msg;
  msg.sender = AgentId(r.get<std::uint32_t>());
  msg.receiver = AgentId(r.get<std::uint32_t>());
  msg.round = r.get<std::uint32_t>();
  const auto urgency = r.get<std::uint8_t>();
  if (urgency > 2) throw Error(ErrorCode::WireFormat, "bad urgency tag");
  msg.urgency = static_cast<Urgency>(urgency);
  const bool has_proposal = r.get<std::uint8_t>() != 0;
  msg.sender_action = r.get<double>();
  const double proposed = r.get<double>();
  if (has_proposal) msg.proposed_for_receiver = proposed;
  msg.rollout_reward = r.get<double>();
  msg.stats = get_stats(r);
  if (r.position() != bytes.size()) throw Error(ErrorCode::WireFormat, "trailing bytes after message");
  return msg;
}

}  // namespace mfn
