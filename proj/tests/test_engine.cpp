#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <vector>

#include "cascade/engine.hpp"
#include "cascade/util.hpp"

using namespace cascade;

namespace {

SocialGraph path_graph(int n) {
    std::vector<NodeAttrs> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i].id = i;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    Rng rng(1);
    return SocialGraph::build(std::move(nodes), edges, rng);
}

SocialGraph star_graph(int leaves) {
    std::vector<NodeAttrs> nodes(leaves + 1);
    for (int i = 0; i <= leaves; ++i) nodes[i].id = i;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
    Rng rng(1);
    return SocialGraph::build(std::move(nodes), edges, rng);
}

TransientCopy sure_copy() {
    TransientCopy p;
    p.view_prob = 1.0;
    p.visibility_window = 1e9;
    p.response = {1.0, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {1.0, 2.0, 0.0}; // view 1s, effort 2s, deterministic
    return p;
}

int count_kind(const Cascade& c, EventKind k) {
    int n = 0;
    for (const Event& ev : c.events) n += ev.kind == k ? 1 : 0;
    return n;
}

} // namespace

TEST_CASE("view_prob=0 leaves only the seed posts") {
    const SocialGraph g = path_graph(5);
    TransientCopy p = sure_copy();
    p.view_prob = 0.0;
    const Cascade c = simulate(g, p, {0, 3}, 1e6, Rng(1));
    CHECK(c.events.size() == 2);
    for (const Event& ev : c.events) CHECK(ev.kind == EventKind::Post);
    const CascadeTree tree = build_tree(c);
    CHECK(tree.size() == 2); // adopters = seeds
    CHECK(tree.root_count() == 2);
}

TEST_CASE("deterministic hand trace on the path a-b-c") {
    const SocialGraph g = path_graph(3);
    const Cascade c = simulate(g, sure_copy(), {0}, 1e6, Rng(1));

    const CascadeTree tree = build_tree(c);
    REQUIRE(tree.size() == 3);
    const auto a = tree.index_of(0), b = tree.index_of(1), cc = tree.index_of(2);
    REQUIRE(a >= 0);
    REQUIRE(b >= 0);
    REQUIRE(cc >= 0);
    CHECK(tree.parent(a) == -1);
    CHECK(tree.id(tree.parent(b)) == 0);
    CHECK(tree.id(tree.parent(cc)) == 1);
    // Post(a)@0, View(b)@1, Adopt(b)@3, Post(b)@3, View(c)@4, Adopt(c)@6.
    CHECK(tree.adoption_time(b) == doctest::Approx(3.0));
    CHECK(tree.adoption_time(cc) == doctest::Approx(6.0));
}

TEST_CASE("nomination fanout caps branching on a star") {
    const SocialGraph g = star_graph(5);
    Nomination nom;
    nom.fanout = 1;
    nom.view_prob = 1.0;
    nom.response = {1.0, ResponseShape::Flat, 0.0, 0.0, 0.0};
    nom.delays = {1.0, 2.0, 0.0};
    const Cascade c = simulate(g, nom, {0}, 1e6, Rng(7));
    const CascadeTree tree = build_tree(c);
    CHECK(tree.size() == 2); // center plus exactly one nominee
    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i)
        CHECK(tree.children(i).size() <= static_cast<std::size_t>(nom.fanout));
}

TEST_CASE("simulate validates its inputs") {
    const SocialGraph g = path_graph(3);
    CHECK_THROWS_AS(simulate(g, sure_copy(), {}, 1e6, Rng(1)), InvalidArgument);
    CHECK_THROWS_AS(simulate(g, sure_copy(), {9}, 1e6, Rng(1)), InvalidArgument);
    CHECK_THROWS_AS(simulate(g, sure_copy(), {0}, 0.0, Rng(1)), InvalidArgument);
    CHECK_THROWS_AS(simulate(g, sure_copy(), {0, 0}, 1e6, Rng(1)), InvalidArgument);
}

TEST_CASE("build_tree follows the earliest view") {
    Cascade c;
    c.protocol = sure_copy();
    c.seeds = {7, 9};
    c.events = {
        {0.0, EventKind::Post, 7, -1, 0},
        {0.0, EventKind::Post, 9, -1, 0},
        {3.0, EventKind::View, 5, 9, 1},
        {5.0, EventKind::View, 5, 7, 2},
        {6.0, EventKind::Adopt, 5, 7, 2},
    };
    const CascadeTree tree = build_tree(c);
    REQUIRE(tree.size() == 3);
    const auto i5 = tree.index_of(5);
    CHECK(tree.id(tree.parent(i5)) == 9); // first seen, not the triggering view
}

TEST_CASE("build_tree on a log with only seed posts") {
    Cascade c;
    c.protocol = sure_copy();
    c.seeds = {1};
    c.events = {{0.0, EventKind::Post, 1, -1, 0}};
    const CascadeTree tree = build_tree(c);
    CHECK(tree.size() == 1);
    CHECK(tree.roots().size() == 1);
    CHECK(tree.children(0).empty());
}

TEST_CASE("build_tree rejects corrupt logs") {
    Cascade c;
    c.protocol = sure_copy();
    c.seeds = {1};
    c.events = {
        {0.0, EventKind::Post, 1, -1, 0},
        {2.0, EventKind::Adopt, 4, 1, 1}, // no prior view
    };
    CHECK_THROWS_AS(build_tree(c), InvalidArgument);
}

TEST_CASE("identical inputs give identical event logs") {
    GraphConfig cfg;
    cfg.n = 800;
    cfg.rng_seed = 5;
    const SocialGraph g = generate_graph(cfg);
    TransientCopy p = sure_copy();
    p.view_prob = 0.6;
    p.response.base_rate = 0.4;
    p.delays = {30.0, 20.0, 0.5};

    std::ostringstream s1, s2;
    write_cascade(simulate(g, p, {0, 1, 2}, 86400.0, Rng(11), "ref", 11), s1);
    write_cascade(simulate(g, p, {0, 1, 2}, 86400.0, Rng(11), "ref", 11), s2);
    CHECK(s1.str() == s2.str());
}

TEST_CASE("event log conservation and ordering invariants") {
    GraphConfig cfg;
    cfg.n = 1500;
    cfg.rng_seed = 21;
    const SocialGraph g = generate_graph(cfg);
    Volunteer vol;
    vol.view_prob = 0.7;
    vol.signup_prob = 0.8;
    vol.max_assignments = 3;
    vol.completion_prob = 0.9;
    vol.response = {0.5, ResponseShape::Increasing, 1.0, 1.0, 0.0};
    vol.delays = {10.0, 30.0, 0.5};
    const Cascade c = simulate(g, vol, {0, 1, 2, 3}, 1e7, Rng(5));
    const CascadeTree tree = build_tree(c);

    CHECK(count_kind(c, EventKind::Adopt) ==
          static_cast<int>(tree.size() - c.seeds.size()));
    CHECK(count_kind(c, EventKind::View) >= static_cast<int>(tree.size() - c.seeds.size()));
    CHECK(count_kind(c, EventKind::Assign) <= count_kind(c, EventKind::Signup));

    for (std::size_t i = 1; i < c.events.size(); ++i) {
        const Event& a = c.events[i - 1];
        const Event& b = c.events[i];
        const bool ordered =
            a.time < b.time ||
            (a.time == b.time &&
             (static_cast<int>(a.kind) < static_cast<int>(b.kind) ||
              (a.kind == b.kind && a.actor <= b.actor)));
        CHECK(ordered);
    }

    // At most one adoption per node, every adoption preceded by a view.
    std::vector<int> adopts(g.size(), 0), views(g.size(), 0);
    for (const Event& ev : c.events) {
        if (ev.kind == EventKind::View) ++views[ev.actor];
        if (ev.kind == EventKind::Adopt) {
            ++adopts[ev.actor];
            CHECK(views[ev.actor] >= 1);
        }
    }
    for (std::size_t v = 0; v < g.size(); ++v) CHECK(adopts[v] <= 1);
}

TEST_CASE("horizon truncates the simulation") {
    const SocialGraph g = path_graph(50);
    const Cascade c = simulate(g, sure_copy(), {0}, 10.0, Rng(1));
    for (const Event& ev : c.events) CHECK(ev.time <= 10.0);
    // Chain advances 3 s per hop: nodes 1,2,3 adopt by t=9.
    CHECK(build_tree(c).size() == 4);
}

TEST_CASE("cascade log round-trips through its file format") {
    const SocialGraph g = path_graph(6);
    TransientCopy p = sure_copy();
    p.delays = {1.5, 2.25, 0.3};
    const Cascade c = simulate(g, p, {0}, 1e6, Rng(3), "graphref", 3);
    std::ostringstream first;
    write_cascade(c, first);
    std::istringstream in(first.str());
    const Cascade back = read_cascade(in);
    CHECK(back.seeds == c.seeds);
    CHECK(back.rng_seed == c.rng_seed);
    CHECK(back.graph_ref == c.graph_ref);
    REQUIRE(back.events.size() == c.events.size());
    for (std::size_t i = 0; i < c.events.size(); ++i) {
        CHECK(back.events[i].time == c.events[i].time);
        CHECK(back.events[i].kind == c.events[i].kind);
        CHECK(back.events[i].actor == c.events[i].actor);
        CHECK(back.events[i].source == c.events[i].source);
        CHECK(back.events[i].exposure_index == c.events[i].exposure_index);
    }
    std::ostringstream second;
    write_cascade(back, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("persistent copy schedules repeat views") {
    const SocialGraph g = star_graph(30);
    PersistentCopy p;
    p.view_prob = 1.0;
    p.visibility_window = 1e6;
    p.repeat_view_rate = 1.0 / 100.0;
    p.response = {0.0, ResponseShape::Flat, 0.0, 0.0, 0.0}; // nobody adopts
    p.delays = {10.0, 10.0, 0.0};
    const Cascade c = simulate(g, p, {0}, 5000.0, Rng(2));
    // Every leaf keeps getting views while the post stays visible.
    int max_k = 0;
    for (const Event& ev : c.events)
        if (ev.kind == EventKind::View) max_k = std::max(max_k, ev.exposure_index);
    CHECK(max_k > 5);
}
