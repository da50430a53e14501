#include "tga/data.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace tga {

using nlohmann::json;

namespace {

struct ProtoEvent {
  int64_t item;
  int64_t cat;
  Behavior beh;
};

int64_t item_category(int64_t item, int n_categories) { return item % n_categories; }

/// Draws an item id of the given category that does not appear in `used`.
int64_t fresh_item(Rng& rng, const GeneratorConfig& cfg, int64_t cat,
                   const std::unordered_set<int64_t>& used) {
  const int64_t per_cat = cfg.n_items / cfg.n_categories;
  for (int tries = 0; tries < 64; ++tries) {
    const int64_t item = cat + cfg.n_categories * rng.uniform_int(0, per_cat - 1);
    if (!used.count(item)) return item;
  }
  return cat;  // tiny vocabularies may not have a fresh item left
}

Behavior draw_behavior(Rng& rng, const GeneratorConfig& cfg) {
  return static_cast<Behavior>(rng.weighted_index(cfg.behavior_rates));
}

}  // namespace

bool has_pattern(const Sample& sample, PatternKind kind) {
  // Last two behaviors per item, scanned in order; transitions are
  // consecutive occurrences of the same item.
  std::unordered_map<int64_t, std::pair<int, int>> last2;  // item -> (prev2, prev1), -1 = none
  for (const Event& e : sample.sequence.events) {
    auto it = last2.find(e.item_id);
    const int prev2 = it == last2.end() ? -1 : it->second.first;
    const int prev1 = it == last2.end() ? -1 : it->second.second;
    if (e.category_id == sample.candidate.category_id) {
      if (kind == PatternKind::item_click_cart) {
        if (prev1 == static_cast<int>(Behavior::click) && e.behavior == Behavior::cart)
          return true;
      } else {
        if (prev2 == static_cast<int>(Behavior::click) &&
            prev1 == static_cast<int>(Behavior::cart) && e.behavior == Behavior::purchase)
          return true;
      }
    }
    last2[e.item_id] = {prev1, static_cast<int>(e.behavior)};
  }
  return false;
}

std::vector<Sample> generate(const GeneratorConfig& cfg) {
  if (cfg.p_convert_base < 0 || cfg.p_convert_base >= cfg.p_convert_when_pattern ||
      cfg.p_convert_when_pattern > 1)
    throw DataError("generator requires 0 <= p_convert_base < p_convert_when_pattern <= 1");
  if (cfg.n_items < cfg.n_categories) throw DataError("n_items must be >= n_categories");

  Rng rng(cfg.seed);
  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(cfg.n_samples));
  const int64_t per_cat = cfg.n_items / cfg.n_categories;

  for (int64_t s = 0; s < cfg.n_samples; ++s) {
    Sample sample;
    sample.profile.resize(cfg.profile_dim);
    for (auto& v : sample.profile) v = rng.normal(0.0, 0.5);

    // User-preferred category mix.
    std::vector<int64_t> pref;
    while (static_cast<int>(pref.size()) < std::min(cfg.pref_categories, cfg.n_categories)) {
      const int64_t c = rng.uniform_int(0, cfg.n_categories - 1);
      if (std::find(pref.begin(), pref.end(), c) == pref.end()) pref.push_back(c);
    }

    const int64_t cand_cat = rng.bernoulli(cfg.candidate_from_pref)
                                 ? pref[rng.uniform_index(pref.size())]
                                 : rng.uniform_int(0, cfg.n_categories - 1);
    sample.candidate.category_id = cand_cat;
    sample.candidate.item_id = cand_cat + cfg.n_categories * rng.uniform_int(0, per_cat - 1);

    const int total_len = static_cast<int>(rng.uniform_int(cfg.seq_len_min, cfg.seq_len_max));

    // Base events: items mostly from the preferred mix, with revisits.
    std::vector<ProtoEvent> proto;
    proto.reserve(total_len);
    std::vector<int64_t> recent;
    std::unordered_set<int64_t> used;
    int base_len = total_len;

    std::vector<std::vector<ProtoEvent>> injected;
    if (cfg.pattern == PatternKind::two_hop_chain) {
      const bool plant_chain = rng.bernoulli(cfg.inject_chain);
      const bool decoy_head = rng.bernoulli(cfg.inject_decoy);
      const bool decoy_tail = rng.bernoulli(cfg.inject_decoy);
      if (plant_chain) {
        const int64_t item = fresh_item(rng, cfg, cand_cat, used);
        used.insert(item);
        injected.push_back({{item, cand_cat, Behavior::click},
                            {item, cand_cat, Behavior::cart},
                            {item, cand_cat, Behavior::purchase}});
      }
      if (decoy_head) {  // click->cart with no purchase
        const int64_t item = fresh_item(rng, cfg, cand_cat, used);
        used.insert(item);
        injected.push_back(
            {{item, cand_cat, Behavior::click}, {item, cand_cat, Behavior::cart}});
      }
      if (decoy_tail) {  // cart->purchase with no click in front
        const int64_t item = fresh_item(rng, cfg, cand_cat, used);
        used.insert(item);
        injected.push_back(
            {{item, cand_cat, Behavior::cart}, {item, cand_cat, Behavior::purchase}});
      }
      int n_injected = 0;
      for (const auto& grp : injected) n_injected += static_cast<int>(grp.size());
      base_len = std::max(1, total_len - n_injected);
    }

    for (int i = 0; i < base_len; ++i) {
      int64_t item;
      if (!recent.empty() && rng.bernoulli(cfg.repeat_affinity)) {
        item = recent[rng.uniform_index(recent.size())];
      } else {
        const int64_t cat = rng.bernoulli(0.9) ? pref[rng.uniform_index(pref.size())]
                                               : rng.uniform_int(0, cfg.n_categories - 1);
        item = cat + cfg.n_categories * rng.uniform_int(0, per_cat - 1);
        recent.push_back(item);
        if (recent.size() > 8) recent.erase(recent.begin());
      }
      used.insert(item);
      proto.push_back({item, item_category(item, cfg.n_categories), draw_behavior(rng, cfg)});
    }

    // Splice each injected group at random positions, keeping the group's
    // internal order (later members insert at or after the previous one).
    for (const auto& grp : injected) {
      size_t min_pos = 0;
      for (const ProtoEvent& ev : grp) {
        const size_t pos = min_pos + rng.uniform_index(proto.size() + 1 - min_pos);
        proto.insert(proto.begin() + static_cast<long>(pos), ev);
        min_pos = pos + 1;
      }
    }

    sample.sequence.events.clear();
    int64_t ts = 1'000'000;
    for (size_t i = 0; i < proto.size(); ++i) {
      ts += static_cast<int64_t>(rng.log_uniform(static_cast<double>(cfg.gap_min_s),
                                                 static_cast<double>(cfg.gap_max_s)));
      Event e;
      e.item_id = proto[i].item;
      e.category_id = proto[i].cat;
      e.behavior = proto[i].beh;
      e.timestamp = ts;
      e.position = static_cast<int>(i);
      sample.sequence.events.push_back(e);
    }

    const bool pattern = has_pattern(sample, cfg.pattern);
    sample.label =
        rng.bernoulli(pattern ? cfg.p_convert_when_pattern : cfg.p_convert_base) ? 1 : 0;
    out.push_back(std::move(sample));
  }
  return out;
}

double bayes_optimal_auc(double p, double q, double prevalence) {
  const double pi = prevalence;
  const double pos = pi * p + (1 - pi) * q;
  const double neg = pi * (1 - p) + (1 - pi) * (1 - q);
  if (pos <= 0 || neg <= 0) return 0.5;
  const double a = pi * p / pos;            // P(pattern | y = 1)
  const double b = pi * (1 - p) / neg;      // P(pattern | y = 0)
  return a * (1 - b) + 0.5 * (a * b + (1 - a) * (1 - b));
}

double pattern_prevalence(const std::vector<Sample>& samples, PatternKind kind) {
  if (samples.empty()) return 0.0;
  int64_t n = 0;
  for (const auto& s : samples) n += has_pattern(s, kind) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(samples.size());
}

void write_jsonl(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  for (const Sample& s : samples) {
    json j;
    j["profile"] = s.profile;
    json events = json::array();
    for (const Event& e : s.sequence.events) {
      events.push_back({{"item", e.item_id},
                        {"cat", e.category_id},
                        {"beh", to_string(e.behavior)},
                        {"ts", e.timestamp}});
    }
    j["events"] = std::move(events);
    j["candidate"] = {{"item", s.candidate.item_id}, {"cat", s.candidate.category_id}};
    j["label"] = s.label;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed: " + path);
}

std::vector<Sample> load_jsonl(const std::string& path, int max_seq_len) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  std::vector<Sample> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": malformed JSON: " + e.what());
    }
    try {
      Sample s;
      s.profile = j.at("profile").get<std::vector<double>>();
      int pos = 0;
      for (const auto& je : j.at("events")) {
        Event e;
        e.item_id = je.at("item").get<int64_t>();
        e.category_id = je.at("cat").get<int64_t>();
        const std::string beh = je.at("beh").get<std::string>();
        const auto b = behavior_from_string(beh);
        if (!b) throw DataError(where + ": unknown behavior \"" + beh + "\"");
        e.behavior = *b;
        e.timestamp = je.at("ts").get<int64_t>();
        e.position = pos++;
        s.sequence.events.push_back(e);
      }
      s.candidate.item_id = j.at("candidate").at("item").get<int64_t>();
      s.candidate.category_id = j.at("candidate").at("cat").get<int64_t>();
      const int label = j.at("label").get<int>();
      if (label != 0 && label != 1)
        throw DataError(where + ": label must be 0 or 1, got " + std::to_string(label));
      s.label = label;
      s.sequence = truncate_to_recent(s.sequence, max_seq_len);
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<int64_t, int64_t>> batch_ranges(int64_t n, int64_t batch_size) {
  if (batch_size <= 0) throw DataError("batch size must be positive");
  std::vector<std::pair<int64_t, int64_t>> out;
  for (int64_t b = 0; b < n; b += batch_size) out.emplace_back(b, std::min(n, b + batch_size));
  return out;
}

}  // namespace tga
