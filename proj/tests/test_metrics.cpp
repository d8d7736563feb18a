#include <doctest.h>

#include <cmath>
#include <vector>

#include "cascade/metrics.hpp"
#include "cascade/util.hpp"

using namespace cascade;

namespace {

// Trees specified as parent index lists (parents precede children).
CascadeTree tree_of(const std::vector<CascadeTree::Index>& parents) {
    std::vector<NodeId> ids(parents.size());
    std::vector<double> times(parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) {
        ids[i] = static_cast<NodeId>(i);
        times[i] = static_cast<double>(i); // strictly increasing, respects parents
    }
    return CascadeTree::from_parents(ids, times, parents);
}

SocialGraph path_graph(int n) {
    std::vector<NodeAttrs> nodes(n);
    for (int i = 0; i < n; ++i) nodes[i].id = i;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    Rng rng(1);
    return SocialGraph::build(std::move(nodes), edges, rng);
}

TransientCopy sure_copy(double view_median, double effort_median) {
    TransientCopy p;
    p.view_prob = 1.0;
    p.visibility_window = 1e9;
    p.response = {1.0, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {view_median, effort_median, 0.0};
    return p;
}

// Independent oracle: count children per node straight off the parent list.
double brute_force_r(const CascadeTree& tree) {
    std::vector<int> children(tree.size(), 0);
    int roots = 0;
    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i) {
        if (tree.parent(i) < 0)
            ++roots;
        else
            ++children[tree.parent(i)];
    }
    std::int64_t internal = 0, total = 0;
    for (int c : children) {
        if (c > 0) {
            ++internal;
            total += c;
        }
    }
    REQUIRE(internal > 0);
    return static_cast<double>(total) / static_cast<double>(internal);
}

} // namespace

TEST_CASE("reproduction_number on hand-built trees") {
    SUBCASE("perfect binary tree of depth 3 gives 2.0") {
        // 1 root, 2, 4, 8 leaves
        std::vector<CascadeTree::Index> parents = {-1, 0, 0, 1, 1, 2, 2};
        for (CascadeTree::Index leaf_parent : {3, 3, 4, 4, 5, 5, 6, 6})
            parents.push_back(leaf_parent);
        CHECK(reproduction_number(tree_of(parents)) == 2.0);
    }
    SUBCASE("chain of 4 gives 1.0") {
        CHECK(reproduction_number(tree_of({-1, 0, 1, 2})) == 1.0);
    }
    SUBCASE("root with 3 children, one grandchild gives 2.0") {
        CHECK(reproduction_number(tree_of({-1, 0, 0, 0, 1})) == 2.0);
    }
    SUBCASE("single node is undefined") {
        CHECK_THROWS_AS(reproduction_number(tree_of({-1})), UndefinedValue);
    }
}

TEST_CASE("reproduction_number matches brute force on random trees") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(49));
        std::vector<CascadeTree::Index> parents(n);
        parents[0] = -1;
        for (int i = 1; i < n; ++i)
            parents[i] = static_cast<CascadeTree::Index>(rng.below(i));
        const CascadeTree tree = tree_of(parents);
        CHECK(reproduction_number(tree) == brute_force_r(tree));
        // Counting children two ways: (|tree| - roots) / internal.
        std::int64_t internal = 0;
        for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i)
            internal += tree.is_leaf(i) ? 0 : 1;
        CHECK(reproduction_number(tree) ==
              static_cast<double>(n - 1) / static_cast<double>(internal));
    }
}

TEST_CASE("summarize on the 3-node chain hand trace") {
    const SocialGraph g = path_graph(3);
    const Cascade c = simulate(g, sure_copy(1.0, 2.0), {0}, 1e6, Rng(1));
    const CascadeTree tree = build_tree(c);
    const CascadeSummary s = summarize(c, tree, g);
    CHECK(s.adoptions == 3);
    REQUIRE(s.mean_adoption_delay.has_value());
    CHECK(*s.mean_adoption_delay == doctest::Approx(3.0)); // view 1s + effort 2s
    REQUIRE(s.mean_prior_adopted_friends.has_value());
    CHECK(*s.mean_prior_adopted_friends == 1.0);
    REQUIRE(s.reproduction_number.has_value());
    CHECK(*s.reproduction_number == 1.0);
}

TEST_CASE("summarize reports absent fields for a zero-spread cascade") {
    const SocialGraph g = path_graph(3);
    TransientCopy p = sure_copy(1.0, 2.0);
    p.view_prob = 0.0;
    const Cascade c = simulate(g, p, {1}, 1e6, Rng(1));
    const CascadeSummary s = summarize(c, build_tree(c), g);
    CHECK(s.adoptions == 1);
    CHECK_FALSE(s.mean_adoption_delay.has_value());
    CHECK_FALSE(s.reproduction_number.has_value());
    CHECK(s.exposures_per_adopter == 0.0);
}

TEST_CASE("summarize rejects an empty tree") {
    const SocialGraph g = path_graph(3);
    Cascade c;
    const CascadeTree empty;
    CHECK_THROWS_AS(summarize(c, empty, g), InvalidArgument);
}

TEST_CASE("exposure curve matches the configured response") {
    GraphConfig cfg;
    cfg.n = 4000;
    cfg.rng_seed = 31;
    const SocialGraph g = generate_graph(cfg);
    SUBCASE("flat response recovers the base rate at every k") {
        TransientCopy p;
        p.view_prob = 0.8;
        p.visibility_window = 1e18;
        p.response = {0.3, ResponseShape::Flat, 0.0, 0.0, 0.0};
        p.delays = {10.0, 10.0, 0.3};
        const Cascade c = simulate(g, p, {0, 1, 2, 3, 4}, 1e18, Rng(9));
        const ExposureCurve curve = exposure_curve(c);
        std::int64_t adopted_sum = 0;
        for (const auto& [k, pt] : curve.points) {
            adopted_sum += pt.n_adopted;
            if (pt.n_at_risk >= 500) {
                const double sigma =
                    std::sqrt(0.3 * 0.7 / static_cast<double>(pt.n_at_risk));
                CHECK(std::abs(pt.p - 0.3) <= 3.0 * sigma);
            }
        }
        const CascadeTree tree = build_tree(c);
        CHECK(adopted_sum == static_cast<std::int64_t>(tree.size() - c.seeds.size()));
        // n_at_risk is nonincreasing in k.
        std::int64_t prev = -1;
        for (const auto& [k, pt] : curve.points) {
            if (prev >= 0) CHECK(pt.n_at_risk <= prev);
            prev = pt.n_at_risk;
        }
    }
    SUBCASE("decreasing response halves the hazard at k=2") {
        TransientCopy p;
        p.view_prob = 0.8;
        p.visibility_window = 1e18;
        p.response = {0.4, ResponseShape::Decreasing, 1.0, 0.0, 0.0};
        p.delays = {10.0, 10.0, 0.3};
        const Cascade c = simulate(g, p, {0, 1, 2, 3, 4}, 1e18, Rng(9));
        const ExposureCurve curve = exposure_curve(c);
        REQUIRE(curve.points.count(1));
        REQUIRE(curve.points.count(2));
        REQUIRE(curve.points.at(2).n_at_risk >= 200);
        CHECK(curve.points.at(2).p / curve.points.at(1).p == doctest::Approx(0.5).epsilon(0.2));
    }
    SUBCASE("no views yields an empty curve") {
        TransientCopy p = sure_copy(1.0, 1.0);
        p.view_prob = 0.0;
        const Cascade c = simulate(g, p, {0}, 1e6, Rng(1));
        CHECK(exposure_curve(c).points.empty());
    }
}

TEST_CASE("status differential on a hand-built cascade") {
    // P(0) initiated both of its edges; child A(1) initiated none of its 1,
    // child B(2) initiated 1 of its 2. D(3) is B's other endpoint.
    std::vector<NodeAttrs> nodes(4);
    for (int i = 0; i < 4; ++i) nodes[i].id = i;
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}, {0, 2}, {2, 3}};
    const std::vector<NodeId> initiators = {0, 0, 2};
    Rng rng(1);
    const SocialGraph g = SocialGraph::build(std::move(nodes), edges, rng, &initiators);
    REQUIRE(g.initiation_fraction(0) == 1.0);
    REQUIRE(g.initiation_fraction(1) == 0.0);
    REQUIRE(g.initiation_fraction(2) == 0.5);

    Cascade c;
    c.protocol = TransientCopy{};
    c.seeds = {0};
    c.events = {
        {0.0, EventKind::Post, 0, -1, 0},  {1.0, EventKind::View, 1, 0, 1},
        {1.0, EventKind::View, 2, 0, 1},   {2.0, EventKind::Adopt, 1, 0, 1},
        {2.0, EventKind::Post, 1, -1, 0},  {2.5, EventKind::Adopt, 2, 0, 1},
        {2.5, EventKind::Post, 2, -1, 0},  {3.0, EventKind::View, 3, 2, 1},
    };
    const CascadeTree tree = build_tree(c);
    const StatusDifferential sd = status_differential(c, tree, g);
    REQUIRE(sd.mean_if_parent.has_value());
    CHECK(*sd.mean_if_parent == 1.0);
    REQUIRE(sd.mean_if_child.has_value());
    CHECK(*sd.mean_if_child == doctest::Approx(0.25));
    REQUIRE(sd.mean_if_exposed_only.has_value());
    CHECK(*sd.mean_if_exposed_only == 0.0); // D's single edge was initiated by B
    REQUIRE(sd.friend_count_gap.has_value());
    CHECK(*sd.friend_count_gap == doctest::Approx(2.0 - 1.5));
}

TEST_CASE("status differential means sit near one half with equal biases") {
    GraphConfig cfg;
    cfg.n = 6000;
    cfg.rng_seed = 17;
    const SocialGraph g = generate_graph(cfg);
    TransientCopy p;
    p.view_prob = 0.7;
    p.visibility_window = 1e9;
    p.response = {0.25, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {10.0, 10.0, 0.3};
    const Cascade c = simulate(g, p, {0, 1, 2}, 1e9, Rng(3));
    const CascadeTree tree = build_tree(c);
    REQUIRE(tree.size() > 500);
    const StatusDifferential sd = status_differential(c, tree, g);
    // Biases are log-normal but initiation is symmetric two-sided, so group
    // means concentrate near 1/2.
    CHECK(*sd.mean_if_parent == doctest::Approx(0.5).epsilon(0.1));
    CHECK(*sd.mean_if_child == doctest::Approx(0.5).epsilon(0.1));
    CHECK(*sd.mean_if_exposed_only == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("hub-seeded copy cascades flow from high to low degree") {
    GraphConfig cfg;
    cfg.n = 6000;
    cfg.page_fraction = 0.02;
    cfg.rng_seed = 29;
    const SocialGraph g = generate_graph(cfg);
    const auto seeds = g.top_degree_nodes(0.0005);
    TransientCopy p;
    p.view_prob = 0.6;
    p.visibility_window = 1e9;
    p.response = {0.15, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {10.0, 10.0, 0.3};
    const Cascade c = simulate(g, p, seeds, 1e9, Rng(4));
    const CascadeTree tree = build_tree(c);
    REQUIRE(tree.size() > 100);
    const StatusDifferential sd = status_differential(c, tree, g);
    REQUIRE(sd.friend_count_gap.has_value());
    CHECK(*sd.friend_count_gap > 0.0);
}

namespace {

// Fanout-capped offspring make R a clean monotone function of base_rate.
Nomination calib_nomination(double base) {
    Nomination p;
    p.fanout = 3;
    p.view_prob = 1.0;
    p.response = {base, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {10.0, 10.0, 0.3};
    return p;
}

} // namespace

TEST_CASE("calibration finds a fixed point at multiplier one") {
    GraphConfig cfg;
    cfg.n = 2000;
    cfg.rng_seed = 41;
    const SocialGraph g = generate_graph(cfg);
    const Nomination p = calib_nomination(0.6);

    // Measure the current R with the calibration's own replicate streams.
    Rng rng(99);
    std::vector<std::uint64_t> run_seeds(3);
    for (int i = 0; i < 3; ++i) run_seeds[i] = rng.derive(0x43414c49u, i).next();
    double mean_r = 0;
    for (auto s : run_seeds) {
        const Cascade c = simulate(g, p, {0, 1, 2}, 1e7, Rng(s));
        mean_r += reproduction_number(build_tree(c)) / 3.0;
    }
    const CalibrationResult res =
        calibrate_reproduction(g, p, {0, 1, 2}, mean_r, 0.05, 3, 1e7, Rng(99));
    CHECK(res.multiplier == 1.0);
    CHECK(std::abs(res.measured_r - mean_r) <= 0.05);
}

TEST_CASE("calibration converges to a feasible target") {
    GraphConfig cfg;
    cfg.n = 20000;
    cfg.rng_seed = 43;
    const SocialGraph g = generate_graph(cfg);
    const Nomination p = calib_nomination(0.3);
    // Growth-phase window (about seven 22-second generations) so the
    // cascade never exhausts the graph during measurement.
    const CalibrationResult res =
        calibrate_reproduction(g, p, {0, 1, 2}, 1.8, 0.1, 5, 150.0, Rng(7));
    CHECK(std::abs(res.measured_r - 1.8) <= 0.1);
    CHECK(response_of(res.spec).base_rate ==
          doctest::Approx(std::min(1.0, 0.3 * res.multiplier)));
}

TEST_CASE("calibration reports unreachable targets") {
    // Complete graph on 6 nodes: degree 5 bounds the audience, so R=50 is
    // out of reach even at base_rate 1.
    std::vector<NodeAttrs> nodes(6);
    for (int i = 0; i < 6; ++i) nodes[i].id = i;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int u = 0; u < 6; ++u)
        for (int v = u + 1; v < 6; ++v) edges.emplace_back(u, v);
    Rng rng(1);
    const SocialGraph g = SocialGraph::build(std::move(nodes), edges, rng);
    TransientCopy p;
    p.view_prob = 1.0;
    p.visibility_window = 1e9;
    p.response = {0.5, ResponseShape::Flat, 0.0, 0.0, 0.0};
    p.delays = {1.0, 1.0, 0.0};
    CHECK_THROWS_WITH_AS(
        static_cast<void>(calibrate_reproduction(g, p, {0}, 50.0, 0.5, 3, 1e6, Rng(1))),
        doctest::Contains("unreachable"), std::runtime_error);
}

TEST_CASE("summary csv renders absent fields as empty cells") {
    CascadeSummary s;
    s.adoptions = 1;
    const std::string row = summary_csv_row("transient_copy", 0, s);
    CHECK(row == "transient_copy,0,1,0,0,,,,,");
}
