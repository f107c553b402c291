#pragma once

#include <cstdint>
#include <vector>

#include "cpsim/core.hpp"
#include "cpsim/geometry.hpp"

namespace cpsim {

// One sensed or relayed road object as carried in a CPM's
// PerceivedObjectContainer. hop_count is the carrying station's stored value:
// 0 for objects it sensed itself, incremented by the receiver on reception.
// measured_at is the original sensor measurement instant and is never
// rewritten by forwarding.
struct PerceivedObject {
  int object_id = 0;
  Vec2 pos;
  double speed_mps = 0.0;
  double heading_deg = 0.0;
  SimTime measured_at = 0;
  int hop_count = 0;
};

struct Cpm {
  int sender_id = 0;
  Vec2 sender_pos;
  SimTime generated_at = 0;
  std::vector<PerceivedObject> objects;
};

enum class Transport { Shb, Gbc };

struct GeoNetPacket {
  Transport transport = Transport::Shb;
  int source_id = 0;
  Vec2 source_pos;
  std::uint32_t sequence = 0;
  SimTime origin_time = 0;
  SimTime lifetime = 0;
  int remaining_hops = 0;
  // GBC only: the target circle fixed at origination.
  Vec2 target_center;
  double target_radius_m = 0.0;
  // position/id of whoever transmitted this copy (origin or a forwarder)
  int last_hop_id = 0;
  Vec2 last_hop_pos;
  Cpm payload;
};

}  // namespace cpsim
