#include "tga/events.hpp"

namespace tga {

const char* to_string(Behavior b) {
  switch (b) {
    case Behavior::click: return "click";
    case Behavior::cart: return "cart";
    case Behavior::favorite: return "favorite";
    case Behavior::purchase: return "purchase";
  }
  return "?";
}

std::optional<Behavior> behavior_from_string(const std::string& s) {
  if (s == "click") return Behavior::click;
  if (s == "cart") return Behavior::cart;
  if (s == "favorite") return Behavior::favorite;
  if (s == "purchase") return Behavior::purchase;
  return std::nullopt;
}

std::optional<SequenceViolation> validate_sequence(const BehaviorSequence& seq) {
  for (int i = 0; i < seq.size(); ++i) {
    const Event& e = seq.events[i];
    if (e.item_id < 0) return SequenceViolation{i, "negative item_id"};
    if (e.category_id < 0) return SequenceViolation{i, "negative category_id"};
    if (e.timestamp < 0) return SequenceViolation{i, "negative timestamp"};
    if (e.position != i) return SequenceViolation{i, "position does not match index"};
    if (i > 0 && e.timestamp < seq.events[i - 1].timestamp)
      return SequenceViolation{i, "timestamps decrease"};
  }
  return std::nullopt;
}

BehaviorSequence truncate_to_recent(const BehaviorSequence& seq, int k) {
  BehaviorSequence out;
  const int n = seq.size();
  const int keep = k < n ? k : n;
  out.events.reserve(keep);
  for (int i = n - keep; i < n; ++i) {
    Event e = seq.events[i];
    e.position = i - (n - keep);
    out.events.push_back(e);
  }
  return out;
}

}  // namespace tga
