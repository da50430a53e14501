#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tga {

/// The four interaction types. Codes are part of the on-disk and checkpoint
/// contracts and must not be reordered.
enum class Behavior : uint8_t { click = 0, cart = 1, favorite = 2, purchase = 3 };

inline constexpr int kNumBehaviors = 4;

const char* to_string(Behavior b);
std::optional<Behavior> behavior_from_string(const std::string& s);

/// One user interaction. `position` is the event's index within its sequence.
struct Event {
  int64_t item_id = 0;
  int64_t category_id = 0;
  Behavior behavior = Behavior::click;
  int64_t timestamp = 0;
  int position = 0;
};

struct BehaviorSequence {
  std::vector<Event> events;

  int size() const { return static_cast<int>(events.size()); }
  bool empty() const { return events.empty(); }
};

struct Candidate {
  int64_t item_id = 0;
  int64_t category_id = 0;
};

/// One training/eval instance: opaque profile vector, behavior sequence,
/// candidate item, binary conversion label.
struct Sample {
  std::vector<double> profile;
  BehaviorSequence sequence;
  Candidate candidate;
  int label = 0;
};

struct SequenceViolation {
  int index = 0;
  std::string what;
};

/// Returns nullopt iff all sequence invariants hold; otherwise the first
/// violated invariant with the offending event index.
std::optional<SequenceViolation> validate_sequence(const BehaviorSequence& seq);

/// Last min(k, length) events with positions re-indexed from 0.
BehaviorSequence truncate_to_recent(const BehaviorSequence& seq, int k);

}  // namespace tga
