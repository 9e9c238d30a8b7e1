#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "gridwm/common.hpp"

namespace gridwm {

// One real environment step. The extrinsic reward is structurally absent
// during reward-free pretraining; a value may only be attached when the
// owning buffer was created reward-capable.
struct Transition {
  std::vector<uint8_t> obs;
  int action = 0;
  std::optional<double> r_ext;
  double cont = 1.0;  // 0 on the terminal step of an episode
};

// Episode-structured ring buffer serving uniform fixed-length subsequences.
// Subsequences never span episode boundaries.
class ReplayBuffer {
 public:
  ReplayBuffer(size_t capacity_steps, bool allow_reward)
      : capacity_(capacity_steps), allow_reward_(allow_reward) {}

  // A transition with cont == 0 closes the current episode.
  void append(Transition t);
  // Closes the current episode without a terminal flag (truncation).
  void end_episode();

  void set_read_only(bool ro) { read_only_ = ro; }
  bool read_only() const { return read_only_; }

  size_t size_steps() const { return total_steps_; }
  size_t episode_count() const;
  uint64_t append_count() const { return append_count_; }
  bool allow_reward() const { return allow_reward_; }

  // B contiguous intra-episode subsequences of exact length L, uniform over
  // all valid (episode, offset) pairs.
  std::vector<std::vector<Transition>> sample_sequences(int B, int L, SeededRng& rng) const;

 private:
  void evict_if_needed();

  size_t capacity_;
  bool allow_reward_;
  bool read_only_ = false;
  std::deque<std::vector<Transition>> episodes_;  // closed episodes
  std::vector<Transition> current_;               // open episode
  size_t total_steps_ = 0;
  uint64_t append_count_ = 0;
};

}  // namespace gridwm
