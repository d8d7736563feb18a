#include "cascade/engine.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <type_traits>

#include "cascade/util.hpp"

namespace cascade {

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::View: return "View";
        case EventKind::Signup: return "Signup";
        case EventKind::Assign: return "Assign";
        case EventKind::Adopt: return "Adopt";
        case EventKind::Post: return "Post";
    }
    return "Post";
}

EventKind event_kind_from_name(const std::string& name) {
    if (name == "View") return EventKind::View;
    if (name == "Signup") return EventKind::Signup;
    if (name == "Assign") return EventKind::Assign;
    if (name == "Adopt") return EventKind::Adopt;
    if (name == "Post") return EventKind::Post;
    throw InvalidArgument("unknown event kind: " + name);
}

namespace {

enum class NodeState : std::uint8_t {
    Susceptible, // may still be exposed
    Pending,     // decided to adopt, effort under way
    Adopted,
    Retired, // volunteer who was assigned but did not complete
};

// Scheduled occurrences; everything else (Post, Signup, Assign) is logged
// inline while processing these.
enum class QKind : std::uint8_t { View, AdoptFire };

struct QEvent {
    double time;
    QKind kind;
    NodeId actor;
    NodeId source;
    float tie;        // normalized tie strength of (actor, source)
    bool targeted;
    double post_time; // persistent copy: when the viewed post was made
    int trigger_k;    // AdoptFire: exposure index that led here
    std::uint64_t seq;
};

// Matches the log ordering rule: View < Signup < Assign < Adopt < Post.
int queue_rank(QKind k) {
    return k == QKind::View ? static_cast<int>(EventKind::View)
                            : static_cast<int>(EventKind::Adopt);
}

struct QLater {
    bool operator()(const QEvent& a, const QEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        const int ra = queue_rank(a.kind), rb = queue_rank(b.kind);
        if (ra != rb) return ra > rb;
        if (a.actor != b.actor) return a.actor > b.actor;
        return a.seq > b.seq;
    }
};

struct Sim {
    const SocialGraph& graph;
    const ProtocolSpec& spec;
    Rng& rng;
    double horizon;

    std::priority_queue<QEvent, std::vector<QEvent>, QLater> queue;
    std::vector<Event> log;
    std::vector<NodeState> state;
    std::vector<int> exposures;
    std::vector<int> assignments; // volunteer: per recruiting poster
    std::uint64_t seq = 0;

    const ExposureResponse& response;
    const DelayModel& delays;
    double view_prob;

    Sim(const SocialGraph& g, const ProtocolSpec& s, Rng& r, double h)
        : graph(g), spec(s), rng(r), horizon(h), state(g.size(), NodeState::Susceptible),
          exposures(g.size(), 0), response(response_of(s)), delays(delays_of(s)),
          view_prob(view_prob_of(s)) {
        if (std::holds_alternative<Volunteer>(spec)) assignments.assign(g.size(), 0);
    }

    void push_view(double t, NodeId actor, NodeId source, float tie, bool targeted,
                   double post_time) {
        queue.push({t, QKind::View, actor, source, tie, targeted, post_time, 0, seq++});
    }

    double tie_of(NodeId u, NodeId v) const {
        // v's position in u's sorted friend list gives the cached edge meta.
        const auto nb = graph.neighbors(u);
        const auto it = std::lower_bound(nb.begin(), nb.end(), v);
        const auto idx = graph.incident_edges(u)[static_cast<std::size_t>(it - nb.begin())];
        return tie_strength_norm(graph.edge(idx).meta.mutual_friends);
    }

    void post(NodeId poster, double t) {
        log.push_back({t, EventKind::Post, poster, -1, 0});
        const double window = std::visit(
            [](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, TransientCopy> ||
                              std::is_same_v<T, PersistentCopy>)
                    return s.visibility_window;
                else
                    return std::numeric_limits<double>::infinity();
            },
            spec);
        for (const ExposureTarget& target : exposure_targets(spec, poster, graph, rng)) {
            if (!rng.bernoulli(view_prob)) continue;
            const double delay = sample_delay(delays, DelayKind::View, rng);
            if (delay > window) continue; // content no longer visible
            push_view(t + delay, target.node, poster,
                      static_cast<float>(tie_of(poster, target.node)), target.targeted, t);
        }
    }

    void on_view(const QEvent& ev) {
        if (state[ev.actor] != NodeState::Susceptible) return; // discarded
        const int k = ++exposures[ev.actor];
        log.push_back({ev.time, EventKind::View, ev.actor, ev.source, k});
        const double p = adoption_probability(response, k, ev.tie, ev.targeted,
                                              graph.node(ev.actor).is_page);

        if (const auto* vol = std::get_if<Volunteer>(&spec)) {
            // Interested viewers sign up; the poster assigns tasks to the
            // first max_assignments signups. Unassigned signups stay
            // susceptible; assigned ones either complete or retire.
            if (!rng.bernoulli(p * vol->signup_prob)) return;
            log.push_back({ev.time, EventKind::Signup, ev.actor, ev.source, k});
            if (assignments[ev.source] >= vol->max_assignments) return;
            ++assignments[ev.source];
            log.push_back({ev.time, EventKind::Assign, ev.actor, ev.source, k});
            if (rng.bernoulli(vol->completion_prob)) {
                state[ev.actor] = NodeState::Pending;
                const double effort = sample_delay(delays, DelayKind::Effort, rng);
                queue.push({ev.time + effort, QKind::AdoptFire, ev.actor, ev.source, 0.0f, false,
                            0.0, k, seq++});
            } else {
                state[ev.actor] = NodeState::Retired;
            }
            return;
        }

        if (rng.bernoulli(p)) {
            state[ev.actor] = NodeState::Pending;
            const double effort = sample_delay(delays, DelayKind::Effort, rng);
            queue.push({ev.time + effort, QKind::AdoptFire, ev.actor, ev.source, 0.0f, false, 0.0,
                        k, seq++});
            return;
        }
        if (const auto* pc = std::get_if<PersistentCopy>(&spec)) {
            // Still-visible posts keep resurfacing for non-adopters.
            const double next = ev.time + rng.exponential(pc->repeat_view_rate);
            if (next <= ev.post_time + pc->visibility_window)
                push_view(next, ev.actor, ev.source, ev.tie, ev.targeted, ev.post_time);
        }
    }

    void on_adopt(const QEvent& ev) {
        state[ev.actor] = NodeState::Adopted;
        log.push_back({ev.time, EventKind::Adopt, ev.actor, ev.source, ev.trigger_k});
        post(ev.actor, ev.time);
    }

    void run(const std::vector<NodeId>& seeds) {
        for (NodeId s : seeds) state[s] = NodeState::Adopted;
        for (NodeId s : seeds) post(s, 0.0);
        while (!queue.empty()) {
            const QEvent ev = queue.top();
            if (ev.time > horizon) break;
            queue.pop();
            if (ev.kind == QKind::View)
                on_view(ev);
            else
                on_adopt(ev);
        }
        std::stable_sort(log.begin(), log.end(), [](const Event& a, const Event& b) {
            if (a.time != b.time) return a.time < b.time;
            if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
            return a.actor < b.actor;
        });
    }
};

} // namespace

Cascade simulate(const SocialGraph& graph, const ProtocolSpec& spec,
                 const std::vector<NodeId>& seeds, double horizon, Rng rng,
                 const std::string& graph_ref, std::uint64_t rng_seed) {
    if (seeds.empty()) throw InvalidArgument("seeds must be nonempty");
    if (!(horizon > 0)) throw InvalidArgument("horizon must be positive");
    std::vector<bool> seen(graph.size(), false);
    for (NodeId s : seeds) {
        if (s < 0 || static_cast<std::size_t>(s) >= graph.size())
            throw InvalidArgument("unknown seed id " + std::to_string(s));
        if (seen[s]) throw InvalidArgument("duplicate seed id " + std::to_string(s));
        seen[s] = true;
    }

    Sim sim(graph, spec, rng, horizon);
    sim.run(seeds);

    Cascade out;
    out.protocol = spec;
    out.graph_ref = graph_ref;
    out.rng_seed = rng_seed;
    out.horizon = horizon;
    out.seeds = seeds;
    out.events = std::move(sim.log);
    return out;
}

CascadeTree CascadeTree::from_parents(const std::vector<NodeId>& ids,
                                      const std::vector<double>& times,
                                      const std::vector<Index>& parents) {
    CascadeTree t;
    t.ids_ = ids;
    t.times_ = times;
    t.parents_ = parents;
    t.children_.assign(ids.size(), {});
    t.index_.reserve(ids.size());
    for (Index i = 0; i < static_cast<Index>(ids.size()); ++i) {
        if (!t.index_.emplace(ids[i], i).second)
            throw InvalidArgument("duplicate node in tree: " + std::to_string(ids[i]));
        const Index p = parents[i];
        if (p < 0) {
            t.roots_.push_back(i);
        } else {
            if (p >= i) throw InvalidArgument("tree parents must precede children");
            if (!(times[p] < times[i]))
                throw InvalidArgument("parent adoption time must precede child's");
            t.children_[p].push_back(i);
        }
    }
    if (t.roots_.empty() && !ids.empty()) throw InvalidArgument("tree has no root");
    return t;
}

CascadeTree::Index CascadeTree::index_of(NodeId id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

CascadeTree build_tree(const Cascade& cascade) {
    std::vector<NodeId> ids;
    std::vector<double> times;
    std::vector<CascadeTree::Index> parents;
    std::unordered_map<NodeId, CascadeTree::Index> index;
    std::unordered_map<NodeId, NodeId> first_view; // actor -> poster first seen

    ids.reserve(cascade.seeds.size());
    for (NodeId s : cascade.seeds) {
        index.emplace(s, static_cast<CascadeTree::Index>(ids.size()));
        ids.push_back(s);
        times.push_back(0.0);
        parents.push_back(-1);
    }

    for (const Event& ev : cascade.events) {
        if (ev.kind == EventKind::View) {
            first_view.emplace(ev.actor, ev.source); // keeps the earliest
        } else if (ev.kind == EventKind::Adopt) {
            if (index.count(ev.actor))
                throw InvalidArgument("corrupt log: repeated adoption by node " +
                                      std::to_string(ev.actor));
            const auto fv = first_view.find(ev.actor);
            if (fv == first_view.end())
                throw InvalidArgument("corrupt log: adoption without prior view by node " +
                                      std::to_string(ev.actor));
            const auto pit = index.find(fv->second);
            if (pit == index.end())
                throw InvalidArgument("corrupt log: first view of node " +
                                      std::to_string(ev.actor) + " from non-adopter");
            const auto i = static_cast<CascadeTree::Index>(ids.size());
            index.emplace(ev.actor, i);
            ids.push_back(ev.actor);
            times.push_back(ev.time);
            parents.push_back(pit->second);
        }
    }
    return CascadeTree::from_parents(ids, times, parents);
}

void write_cascade(const Cascade& cascade, std::ostream& out) {
    out << "#cascade graph " << (cascade.graph_ref.empty() ? "-" : cascade.graph_ref)
        << " protocol " << protocol_name(kind_of(cascade.protocol)) << " seed "
        << cascade.rng_seed << " horizon " << format_double(cascade.horizon) << "\n";
    out << "#seeds";
    for (NodeId s : cascade.seeds) out << ' ' << s;
    out << "\n";
    for (const Event& ev : cascade.events) {
        out << format_double(ev.time) << ' ' << event_kind_name(ev.kind) << ' ' << ev.actor << ' ';
        if (ev.source < 0)
            out << '-';
        else
            out << ev.source;
        out << ' ';
        if (ev.exposure_index <= 0)
            out << '-';
        else
            out << ev.exposure_index;
        out << "\n";
    }
}

Cascade read_cascade(std::istream& in) {
    Cascade c;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty cascade file");
    auto head = split_ws(line);
    if (head.size() != 9 || head[0] != "#cascade")
        throw InvalidArgument("bad cascade header: " + line);
    c.graph_ref = head[2] == "-" ? "" : std::string(head[2]);
    c.protocol = default_protocol(protocol_from_name(std::string(head[4])));
    c.rng_seed = parse_uint(head[6]);
    c.horizon = parse_double(head[8]);
    if (!std::getline(in, line)) throw InvalidArgument("cascade file missing seeds");
    auto seed_tok = split_ws(line);
    if (seed_tok.empty() || seed_tok[0] != "#seeds")
        throw InvalidArgument("cascade file missing seeds");
    for (std::size_t i = 1; i < seed_tok.size(); ++i)
        c.seeds.push_back(static_cast<NodeId>(parse_int(seed_tok[i])));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok.size() != 5) throw InvalidArgument("bad event line: " + line);
        Event ev;
        ev.time = parse_double(tok[0]);
        ev.kind = event_kind_from_name(std::string(tok[1]));
        ev.actor = static_cast<NodeId>(parse_int(tok[2]));
        ev.source = tok[3] == "-" ? -1 : static_cast<NodeId>(parse_int(tok[3]));
        ev.exposure_index = tok[4] == "-" ? 0 : static_cast<int>(parse_int(tok[4]));
        c.events.push_back(ev);
    }
    return c;
}

void save_cascade(const Cascade& cascade, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::ostringstream buf;
    write_cascade(cascade, buf);
    out << buf.str();
    if (!out) throw std::runtime_error("write failed: " + path);
}

Cascade load_cascade(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open cascade file: " + path);
    return read_cascade(in);
}

} // namespace cascade
