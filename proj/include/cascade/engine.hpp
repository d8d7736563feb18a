#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade/graph.hpp"
#include "cascade/protocol.hpp"
#include "cascade/rng.hpp"

namespace cascade {

enum class EventKind : std::uint8_t { View = 0, Signup = 1, Assign = 2, Adopt = 3, Post = 4 };

std::string event_kind_name(EventKind k);
EventKind event_kind_from_name(const std::string& name);

/// One entry of the simulated action log. `source` is the poster whose
/// content was viewed (View), the assigner (Assign), or the poster whose
/// exposure triggered the adoption (Adopt); -1 when absent.
/// `exposure_index` counts the actor's pre-adoption views; on Adopt it is
/// the index of the exposure that led to the adoption.
struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Post;
    NodeId actor = -1;
    NodeId source = -1;
    int exposure_index = 0; // 0 = absent
};

struct Cascade {
    ProtocolSpec protocol;
    std::string graph_ref; // graph identity: seed + config hash
    std::uint64_t rng_seed = 0;
    double horizon = 0.0;
    std::vector<NodeId> seeds;
    std::vector<Event> events; // sorted by (time, kind rank, actor)
};

/// Adopter DAG (a forest: one root per seed). Node 0..k-1 are the seeds in
/// seed order; the rest follow in adoption order, so parents always precede
/// children.
class CascadeTree {
  public:
    using Index = std::int32_t;

    std::size_t size() const { return ids_.size(); }
    NodeId id(Index i) const { return ids_[i]; }
    double adoption_time(Index i) const { return times_[i]; }
    Index parent(Index i) const { return parents_[i]; } // -1 for roots
    const std::vector<Index>& children(Index i) const { return children_[i]; }
    const std::vector<Index>& roots() const { return roots_; }
    Index index_of(NodeId id) const; // -1 if not an adopter

    std::size_t root_count() const { return roots_.size(); }
    bool is_leaf(Index i) const { return children_[i].empty(); }

    static CascadeTree from_parents(const std::vector<NodeId>& ids,
                                    const std::vector<double>& times,
                                    const std::vector<Index>& parents);

  private:
    std::vector<NodeId> ids_;
    std::vector<double> times_;
    std::vector<Index> parents_;
    std::vector<std::vector<Index>> children_;
    std::vector<Index> roots_;
    std::unordered_map<NodeId, Index> index_;
};

/// Runs one cascade to the horizon (simulated seconds). Strictly
/// sequential; determinism is a function of (graph, spec, seeds, horizon,
/// rng seed). Seeds adopt at t=0 and emit only Post events.
Cascade simulate(const SocialGraph& graph, const ProtocolSpec& spec,
                 const std::vector<NodeId>& seeds, double horizon, Rng rng,
                 const std::string& graph_ref = "", std::uint64_t rng_seed = 0);

/// Rebuilds the adopter forest from the event log: one node per Adopt event
/// plus the seeds as roots; a child's parent is the poster of its
/// chronologically first View.
CascadeTree build_tree(const Cascade& cascade);

void write_cascade(const Cascade& cascade, std::ostream& out);
Cascade read_cascade(std::istream& in);
void save_cascade(const Cascade& cascade, const std::string& path);
Cascade load_cascade(const std::string& path);

} // namespace cascade
