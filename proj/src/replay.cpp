#include "gridwm/replay.hpp"

namespace gridwm {

void ReplayBuffer::append(Transition t) {
  if (read_only_) throw ContractError("append() on a read-only replay buffer");
  if (!allow_reward_ && t.r_ext.has_value())
    throw ContractError("reward-free buffer rejected a transition carrying an extrinsic reward");
  const bool terminal = t.cont == 0.0;
  current_.push_back(std::move(t));
  ++total_steps_;
  ++append_count_;
  if (terminal) {
    episodes_.push_back(std::move(current_));
    current_.clear();
  }
  evict_if_needed();
}

void ReplayBuffer::end_episode() {
  if (current_.empty()) return;
  episodes_.push_back(std::move(current_));
  current_.clear();
}

size_t ReplayBuffer::episode_count() const {
  return episodes_.size() + (current_.empty() ? 0 : 1);
}

void ReplayBuffer::evict_if_needed() {
  // evict oldest whole episodes; the open episode is never evicted
  while (total_steps_ > capacity_ && !episodes_.empty()) {
    total_steps_ -= episodes_.front().size();
    episodes_.pop_front();
  }
}

std::vector<std::vector<Transition>> ReplayBuffer::sample_sequences(int B, int L,
                                                                    SeededRng& rng) const {
  if (B <= 0 || L <= 0) throw DimensionError("sample_sequences requires B > 0 and L > 0");
  // valid (episode, offset) pairs over both closed and open episodes
  std::vector<const std::vector<Transition>*> eps;
  for (const auto& e : episodes_) eps.push_back(&e);
  if (!current_.empty()) eps.push_back(&current_);
  std::vector<size_t> cum;  // cumulative pair counts
  size_t total = 0;
  for (const auto* e : eps) {
    const size_t n = e->size() >= static_cast<size_t>(L) ? e->size() - L + 1 : 0;
    total += n;
    cum.push_back(total);
  }
  if (total == 0)
    throw InsufficientDataError("no episode of length >= " + std::to_string(L) + " in replay");
  std::vector<std::vector<Transition>> out;
  out.reserve(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    const size_t pick = rng.next_index(total);
    size_t ei = 0;
    while (cum[ei] <= pick) ++ei;
    const size_t offset = pick - (ei == 0 ? 0 : cum[ei - 1]);
    const auto& e = *eps[ei];
    out.emplace_back(e.begin() + static_cast<long>(offset),
                     e.begin() + static_cast<long>(offset + static_cast<size_t>(L)));
  }
  return out;
}

}  // namespace gridwm
