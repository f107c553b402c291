#pragma once

#include <limits>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"

namespace cpsim {

enum class DccState { Relaxed, Active1, Active2, Active3, Restrictive };

inline const char* to_string(DccState s) {
  switch (s) {
    case DccState::Relaxed: return "relaxed";
    case DccState::Active1: return "active1";
    case DccState::Active2: return "active2";
    case DccState::Active3: return "active3";
    case DccState::Restrictive: return "restrictive";
  }
  return "?";
}

// Reactive mapping, lower-inclusive bands: cbr < th_relaxed -> Relaxed,
// th_relaxed <= cbr < th_active1 -> Active1, and so on.
inline DccState dcc_state_for(double cbr, const DccConfig& cfg) {
  if (cbr < cfg.th_relaxed) return DccState::Relaxed;
  if (cbr < cfg.th_active1) return DccState::Active1;
  if (cbr < cfg.th_active2) return DccState::Active2;
  if (cbr < cfg.th_active3) return DccState::Active3;
  return DccState::Restrictive;
}

inline SimTime dcc_min_gap_us(DccState s, const DccConfig& cfg) {
  switch (s) {
    case DccState::Relaxed: return from_ms(static_cast<std::int64_t>(cfg.gap_relaxed_ms));
    case DccState::Active1: return from_ms(static_cast<std::int64_t>(cfg.gap_active1_ms));
    case DccState::Active2: return from_ms(static_cast<std::int64_t>(cfg.gap_active2_ms));
    case DccState::Active3: return from_ms(static_cast<std::int64_t>(cfg.gap_active3_ms));
    case DccState::Restrictive:
      return from_ms(static_cast<std::int64_t>(cfg.gap_restrictive_ms));
  }
  return 0;
}

// Per-station transmit gate. A send is allowed when at least the min gap of
// the state in force has elapsed since the last granted send; the caller
// reports the grant via on_sent().
class DccGate {
 public:
  explicit DccGate(const DccConfig& cfg) : cfg_(cfg) {}

  DccState update(double cbr) {
    double effective = cbr;
    if (cfg_.two_sample_average && have_prev_) effective = 0.5 * (cbr + prev_cbr_);
    prev_cbr_ = cbr;
    have_prev_ = true;
    state_ = dcc_state_for(effective, cfg_);
    return state_;
  }

  DccState state() const { return state_; }
  SimTime min_gap_us() const { return dcc_min_gap_us(state_, cfg_); }

  bool allowed(SimTime now) const {
    if (!cfg_.enabled) return true;
    return now - last_tx_ >= min_gap_us();
  }

  void on_sent(SimTime now) { last_tx_ = now; }
  SimTime last_tx() const { return last_tx_; }

 private:
  DccConfig cfg_;
  DccState state_ = DccState::Relaxed;
  SimTime last_tx_ = std::numeric_limits<SimTime>::min() / 4;
  double prev_cbr_ = 0.0;
  bool have_prev_ = false;
};

}  // namespace cpsim
