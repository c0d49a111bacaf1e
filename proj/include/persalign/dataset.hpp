#pragma once

// Preference records: a user, a context index, a slate of action indices
// into that user's bank, and which slate position was chosen.

#include <cstdint>
#include <vector>

#include "persalign/errors.hpp"

namespace persalign {

constexpr int kMaxSlate = 8;

struct PrefRecord {
  std::uint16_t user = 0;
  std::uint16_t ctx = 0;
  std::uint8_t slate_size = 0;
  std::uint8_t label = 0;  // position in the slate, not an action id
  std::uint16_t slate[kMaxSlate] = {0};
};

class PrefDataset {
 public:
  explicit PrefDataset(int num_users) : by_user_(num_users) {}

  void append(const PrefRecord& r) {
    if (r.slate_size == 0 || r.slate_size > kMaxSlate) {
      throw IndexOutOfRange("preference record: bad slate size");
    }
    if (r.label >= r.slate_size) {
      throw IndexOutOfRange("preference record: label outside slate");
    }
    if (r.user >= by_user_.size()) {
      throw IndexOutOfRange("preference record: user out of range");
    }
    by_user_[r.user].push_back(records_.size());
    records_.push_back(r);
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const PrefRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<PrefRecord>& records() const { return records_; }

  // Record indices for one user, in arrival order.
  const std::vector<std::size_t>& user_records(int user) const {
    return by_user_[user];
  }

  int num_users() const { return static_cast<int>(by_user_.size()); }

 private:
  std::vector<PrefRecord> records_;
  std::vector<std::vector<std::size_t>> by_user_;
};

}  // namespace persalign
