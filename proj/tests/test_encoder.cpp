#include <doctest.h>

#include "test_util.hpp"
#include "tga/gradcheck.hpp"
#include "tga/model.hpp"

using namespace tga;

namespace {

ModelConfig tiny_cfg(int layers = 1) {
  ModelConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;
  cfg.layers = layers;
  cfg.v_item = 64;
  cfg.v_cat = 16;
  cfg.v_time_buckets = 16;
  cfg.max_positions = 64;
  cfg.profile_dim = 3;
  cfg.mlp_h1 = 8;
  cfg.mlp_h2 = 4;
  return cfg;
}

BehaviorSequence four_event_example() {
  BehaviorSequence s;
  auto add = [&](int64_t item, int64_t cat, Behavior b, int64_t ts) {
    Event e;
    e.item_id = item;
    e.category_id = cat;
    e.behavior = b;
    e.timestamp = ts;
    e.position = s.size();
    s.events.push_back(e);
  };
  add(1, 7, Behavior::click, 10);
  add(2, 7, Behavior::click, 20);
  add(1, 7, Behavior::cart, 30);
  add(3, 8, Behavior::click, 40);
  return s;
}

/// Sequence whose interior nodes fill all six slots: two items alternating
/// within one category.
BehaviorSequence dense_slot_sequence(int n) {
  BehaviorSequence s;
  for (int i = 0; i < n; ++i) {
    Event e;
    e.item_id = i % 2;
    e.category_id = 0;
    e.behavior = static_cast<Behavior>(i % 4);
    e.timestamp = 10 * (i + 1);
    e.position = i;
    s.events.push_back(e);
  }
  return s;
}

struct EncoderHarness {
  ModelConfig cfg;
  ParameterStore<double> ps;
  TgaEncoder<double> enc;

  explicit EncoderHarness(const ModelConfig& c, uint64_t seed = 11) : cfg(c), ps(seed) {
    Rng rng(seed);
    register_embedding_params(ps, cfg, rng);
    enc.register_params(ps, cfg, rng);
  }
};

}  // namespace

TEST_CASE("dimension closure: 10d transform inputs, 4d node states, d=64") {
  ModelConfig cfg;
  cfg.d = 64;
  REQUIRE(cfg.D() == 256);
  EncoderHarness h(cfg);
  const auto& w = h.ps.value(h.ps.id("layer0.trans.item.in.click->cart.W"));
  CHECK(w.rows == 64);
  CHECK(w.cols == 640);  // 10d
  const auto& b = h.ps.value(h.ps.id("layer0.trans.item.in.click->cart.b"));
  CHECK(b.cols == 64);

  auto seq = four_event_example();
  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  auto plan = SlotPlan::build(build_graph(seq));
  auto out = h.enc.encode(t, h.ps, ns, plan);
  CHECK(t.val(out).rows == 4);
  CHECK(t.val(out).cols == 256);
}

TEST_CASE("transition grid matches the straight-line Eq-style oracle") {
  ModelConfig cfg = tiny_cfg();
  EncoderHarness h(cfg);
  auto seq = four_event_example();
  auto graph = build_graph(seq);
  auto plan = SlotPlan::build(graph);

  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  auto grid = t.val(h.enc.transition_grid(t, h.ps, 0, ns.states, ns, plan));

  const auto& H = t.val(ns.states);
  const auto& Et = t.val(ns.e_time);
  const auto& Ep = t.val(ns.e_pos);
  auto row_of = [](const Mat<double>& m, int r) {
    return std::vector<double>(m.row(r), m.row(r) + m.cols);
  };

  for (const auto& e : graph.edges) {
    for (Direction dir : {Direction::in, Direction::out}) {
      const std::string base =
          trans_param_name(0, e.view, dir, e.src_behavior, e.dst_behavior, false, "");
      const auto& W = h.ps.value(h.ps.id(base + "W"));
      const auto& B = h.ps.value(h.ps.id(base + "b"));
      std::vector<std::vector<double>> Wv(W.rows);
      for (int r = 0; r < W.rows; ++r) Wv[r] = row_of(W, r);
      auto want = tga_test::edge_transform_oracle(row_of(H, e.src), row_of(H, e.dst),
                                                  row_of(Et, e.src), row_of(Et, e.dst),
                                                  row_of(Ep, e.src), row_of(Ep, e.dst), Wv,
                                                  row_of(B, 0));
      const int focus = dir == Direction::in ? e.dst : e.src;
      const int grow = focus * SlotPlan::kSlots + slot_index(e.view, dir);
      for (int j = 0; j < cfg.d; ++j)
        CHECK(grid(grow, j) == doctest::Approx(want[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("all-zero transform weights produce a zero grid") {
  ModelConfig cfg = tiny_cfg();
  EncoderHarness h(cfg);
  for (const auto& entry : h.ps.entries())
    if (entry.name.find(".trans.") != std::string::npos)
      h.ps.value(h.ps.id(entry.name)).fill(0.0);
  auto seq = four_event_example();
  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  auto plan = SlotPlan::build(build_graph(seq));
  const auto& grid = t.val(h.enc.transition_grid(t, h.ps, 0, ns.states, ns, plan));
  for (double v : grid.a) CHECK(v == 0.0);
}

TEST_CASE("neighbor set sizes: isolated node empty, node 0 of the example has 3") {
  ModelConfig cfg = tiny_cfg();
  EncoderHarness h(cfg);

  Rng rng(3);
  auto one = tga_test::random_sequence(rng, 1, 4, 2);
  auto plan1 = SlotPlan::build(build_graph(one));
  int filled = 0;
  for (uint8_t m : plan1.slot_mask) filled += m;
  CHECK(filled == 0);

  auto plan4 = SlotPlan::build(build_graph(four_event_example()));
  int filled0 = 0;
  for (int s = 0; s < 6; ++s) filled0 += plan4.slot_mask[s];
  CHECK(filled0 == 3);

  // degree cap on a long single-category, multi-item sequence
  auto seq = dense_slot_sequence(64);
  auto plan = SlotPlan::build(build_graph(seq));
  for (int c = 0; c < 64; ++c) {
    int k = 0;
    for (int s = 0; s < 6; ++s) k += plan.slot_mask[c * 6 + s];
    CHECK(k <= 6);
  }
}

TEST_CASE("attention weight structure: singleton = 1, six identical = 1/6") {
  Tape<double> t;
  Rng rng(9);
  // singleton: one filled slot
  Mat<double> logits1(1, 6);
  for (auto& v : logits1.a) v = rng.uniform(-2, 2);
  std::vector<uint8_t> mask1(6, 0);
  mask1[2] = 1;
  auto a1 = t.masked_row_softmax(t.input(logits1), mask1);
  CHECK(t.val(a1)(0, 2) == 1.0);

  // six identical transformed vectors -> identical logits -> uniform weights
  Mat<double> logits6(1, 6);
  logits6.fill(0.7331);
  auto a6 = t.masked_row_softmax(t.input(logits6), std::vector<uint8_t>(6, 1));
  for (int s = 0; s < 6; ++s) CHECK(t.val(a6)(0, s) == doctest::Approx(1.0 / 6));

  // property: rows sum to 1 (or 0 when fully masked), entries non-negative
  for (int it = 0; it < 50; ++it) {
    Mat<double> lg(4, 6);
    for (auto& v : lg.a) v = rng.uniform(-5, 5);
    std::vector<uint8_t> mask(24);
    for (auto& m : mask) m = rng.bernoulli(0.6) ? 1 : 0;
    Tape<double> tt;
    auto al = tt.masked_row_softmax(tt.input(lg), mask);
    for (int r = 0; r < 4; ++r) {
      double sum = 0;
      bool any = false;
      for (int s = 0; s < 6; ++s) {
        CHECK(tt.val(al)(r, s) >= 0.0);
        CHECK((mask[r * 6 + s] || tt.val(al)(r, s) == 0.0));
        sum += tt.val(al)(r, s);
        any = any || mask[r * 6 + s];
      }
      CHECK(sum == doctest::Approx(any ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("isolated nodes reduce to the FFN path") {
  ModelConfig cfg = tiny_cfg();
  cfg.enabled_views = {{false, false, false}};
  EncoderHarness h(cfg);
  auto seq = four_event_example();

  GraphOptions gopt;
  gopt.enabled_views = cfg.enabled_views;
  auto plan = SlotPlan::build(build_graph(seq, gopt));

  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  auto full = t.val(h.enc.encode(t, h.ps, ns, plan));

  // reduced computation: out = LN2(e' + FFN(e')), e' = LN1(h)
  Tape<double> t2;
  auto ns2 = embed_sequence(t2, h.ps, seq, cfg);
  auto states = ns2.states;
  auto e1 = t2.layer_norm(states, t2.param(h.ps, "layer0.ln1.g"), t2.param(h.ps, "layer0.ln1.b"));
  auto ffn = t2.add_rowvec(
      t2.matmul_nt(t2.relu(t2.add_rowvec(t2.matmul_nt(e1, t2.param(h.ps, "layer0.ffn.1.W")),
                                         t2.param(h.ps, "layer0.ffn.1.b"))),
                   t2.param(h.ps, "layer0.ffn.2.W")),
      t2.param(h.ps, "layer0.ffn.2.b"));
  auto reduced = t2.val(t2.layer_norm(t2.add(e1, ffn), t2.param(h.ps, "layer0.ln2.g"),
                                      t2.param(h.ps, "layer0.ln2.b")));

  REQUIRE(full.a.size() == reduced.a.size());
  for (size_t i = 0; i < full.a.size(); ++i) CHECK(full.a[i] == reduced.a[i]);
}

TEST_CASE("encode with one layer equals a single layer_forward call") {
  ModelConfig cfg = tiny_cfg(1);
  EncoderHarness h(cfg);
  auto seq = four_event_example();
  auto plan = SlotPlan::build(build_graph(seq));
  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  auto a = t.val(h.enc.encode(t, h.ps, ns, plan));
  Tape<double> t2;
  auto ns2 = embed_sequence(t2, h.ps, seq, cfg);
  auto b = t2.val(h.enc.layer_forward(t2, h.ps, 0, ns2.states, ns2, plan));
  for (size_t i = 0; i < a.a.size(); ++i) CHECK(a.a[i] == b.a[i]);

  Tape<double> t3;
  auto e = embed_sequence(t3, h.ps, BehaviorSequence{}, cfg);
  auto out = h.enc.encode(t3, h.ps, e, SlotPlan::build(build_graph(BehaviorSequence{})));
  CHECK(t3.val(out).rows == 0);
  CHECK(t3.val(out).cols == cfg.D());
}

TEST_CASE("receptive field: layer-l output depends only on <= l-hop nodes") {
  // Distinct items and categories leave only the neighbor path.
  auto make = [](int64_t item0) {
    BehaviorSequence s;
    for (int i = 0; i < 6; ++i) {
      Event e;
      e.item_id = i == 0 ? item0 : 10 + i;
      e.category_id = 100 + i;
      e.behavior = static_cast<Behavior>(i % 4);
      e.timestamp = 50 * (i + 1);
      e.position = i;
      s.events.push_back(e);
    }
    return s;
  };
  auto base = make(40);
  auto perturbed = make(41);
  REQUIRE(vocab_slot(40, 64) != vocab_slot(41, 64));

  for (int layers : {1, 2, 3}) {
    ModelConfig cfg = tiny_cfg(layers);
    EncoderHarness h(cfg, 23);
    auto plan = SlotPlan::build(build_graph(base));

    Tape<double> ta, tb;
    auto na = embed_sequence(ta, h.ps, base, cfg);
    auto nb = embed_sequence(tb, h.ps, perturbed, cfg);
    const auto& a = ta.val(h.enc.encode(ta, h.ps, na, plan));
    const auto& b = tb.val(h.enc.encode(tb, h.ps, nb, plan));

    for (int node = 0; node < 6; ++node) {
      bool differs = false;
      for (int j = 0; j < cfg.D(); ++j) differs = differs || a(node, j) != b(node, j);
      if (node <= layers)
        CHECK(differs);  // within the light cone
      else
        CHECK(!differs);  // bit-identical beyond l hops
    }
  }
}

TEST_CASE("swapping two events with different behaviors changes the output") {
  BehaviorSequence s;
  auto add = [&](Behavior b, int64_t ts) {
    Event e;
    e.item_id = 5;
    e.category_id = 2;
    e.behavior = b;
    e.timestamp = ts;
    e.position = s.size();
    s.events.push_back(e);
  };
  add(Behavior::click, 10);
  add(Behavior::cart, 20);

  BehaviorSequence swapped = s;
  std::swap(swapped.events[0].behavior, swapped.events[1].behavior);

  ModelConfig cfg = tiny_cfg();
  EncoderHarness h(cfg, 31);
  Tape<double> ta, tb;
  auto na = embed_sequence(ta, h.ps, s, cfg);
  auto nb = embed_sequence(tb, h.ps, swapped, cfg);
  const auto& a = ta.val(h.enc.encode(ta, h.ps, na, SlotPlan::build(build_graph(s))));
  const auto& b = tb.val(h.enc.encode(tb, h.ps, nb, SlotPlan::build(build_graph(swapped))));
  double max_diff = 0;
  for (size_t i = 0; i < a.a.size(); ++i) max_diff = std::max(max_diff, std::abs(a.a[i] - b.a[i]));
  CHECK(max_diff > 1e-9);
}

TEST_CASE("single edge-transform layer passes grad_check at 1e-6") {
  ModelConfig cfg = tiny_cfg();
  EncoderHarness h(cfg, 37);
  auto seq = four_event_example();
  auto plan = SlotPlan::build(build_graph(seq));
  auto forward = [&](Tape<double>& t) {
    auto ns = embed_sequence(t, h.ps, seq, cfg);
    return t.sum_all(t.sigmoid(h.enc.transition_grid(t, h.ps, 0, ns.states, ns, plan)));
  };
  auto loss_value = [&]() {
    Tape<double> t;
    return t.val(forward(t))(0, 0);
  };
  auto loss_grad = [&]() {
    Tape<double> t;
    auto l = forward(t);
    const double v = t.val(l)(0, 0);
    t.backward(l, &h.ps.grads);
    return v;
  };
  auto rep = grad_check<double>(loss_value, loss_grad, h.ps, 80, 1e-4, 555);
  CHECK(!rep.nondeterministic);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("full 3-layer TGA + head passes grad_check at 1e-4") {
  ModelConfig cfg = tiny_cfg(3);
  Model<double> model(cfg, 41);
  Rng rng(43);
  auto seq = dense_slot_sequence(8);
  Sample sample;
  sample.sequence = seq;
  sample.profile = {0.2, -0.4, 0.9};
  sample.candidate = {1, 0};
  sample.label = 1;

  auto& ps = model.params();
  auto loss_value = [&]() { return model.forward(sample).loss; };
  auto loss_grad = [&]() { return model.forward_backward(sample, ps.grads).loss; };
  auto rep = grad_check<double>(loss_value, loss_grad, ps, 100, 1e-4, 777);
  CHECK(!rep.nondeterministic);
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("count_flops: closed form within 5% of the instrumented run") {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.layers = 3;
  cfg.v_item = 64;
  cfg.v_cat = 8;
  cfg.max_positions = 512;
  cfg.max_seq_len = 512;
  EncoderHarness h(cfg, 47);
  auto seq = dense_slot_sequence(256);
  Tape<double> t;
  auto ns = embed_sequence(t, h.ps, seq, cfg);
  h.enc.encode(t, h.ps, ns, SlotPlan::build(build_graph(seq)));
  const auto measured = static_cast<double>(t.macs());
  const auto closed = static_cast<double>(
      tga_count_flops(256, cfg.d, cfg.heads, cfg.layers, cfg.dk(), cfg.dv(), cfg.ffn_mult));
  CHECK(std::abs(closed - measured) / measured < 0.05);
}

TEST_CASE("count_flops closed form is linear and layer-additive") {
  const auto f = [](int L, int layers) { return tga_count_flops(L, 16, 4, layers); };
  CHECK(f(512, 3) == 2 * f(256, 3));
  CHECK(f(256, 3) == 3 * f(256, 1));
}

TEST_CASE("share_across_views shrinks the parameter count and still runs") {
  ModelConfig cfg = tiny_cfg();
  EncoderHarness dedicated(cfg, 53);
  ModelConfig shared_cfg = cfg;
  shared_cfg.share_across_views = true;
  EncoderHarness shared(shared_cfg, 53);
  CHECK(shared.ps.total_params() < dedicated.ps.total_params());

  auto seq = four_event_example();
  Tape<double> t;
  auto ns = embed_sequence(t, shared.ps, seq, shared_cfg);
  auto out = shared.enc.encode(t, shared.ps, ns, SlotPlan::build(build_graph(seq)));
  CHECK(t.val(out).all_finite());
}
