#pragma once

#include <string>
#include <variant>
#include <vector>

#include "cascade/graph.hpp"
#include "cascade/rng.hpp"

namespace cascade {

enum class ResponseShape { Flat, Decreasing, Increasing };

std::string shape_name(ResponseShape s);
ResponseShape shape_from_name(const std::string& name);

/// Per-exposure adoption response: how the probability of acting on a view
/// depends on the exposure count, the tie to the poster, and whether the
/// viewer was explicitly called out. page_rate_scale rescales the response
/// for page viewers; effortful protocols ship with 0 (brand accounts
/// reshare content but do not take challenges or volunteer for tasks).
struct ExposureResponse {
    double base_rate = 0.1;         // in [0,1]
    ResponseShape shape = ResponseShape::Flat;
    double shape_strength = 0.0;    // >= 0
    double tie_boost = 0.0;         // multiplier per unit normalized tie strength
    double social_cost_boost = 0.0; // extra multiplier on explicitly-targeted edges
    double page_rate_scale = 1.0;   // in [0,1], response multiplier for page viewers
};

/// Log-normal delay model; medians in simulated seconds.
struct DelayModel {
    double view_delay_median = 60.0;
    double effort_delay_median = 60.0;
    double dispersion = 0.5; // sigma of the log-normal
};

struct TransientCopy {
    double view_prob = 0.3;
    double visibility_window = 21600.0; // short
    ExposureResponse response;
    DelayModel delays;
};

struct PersistentCopy {
    double view_prob = 0.3;
    double visibility_window = 2419200.0; // long
    double repeat_view_rate = 1.0 / 604800.0; // repeat views per second while visible
    ExposureResponse response;
    DelayModel delays;
};

struct Nomination {
    int fanout = 3; // nominees per adopter, >= 1
    double view_prob = 0.98;
    ExposureResponse response;
    DelayModel delays;
};

struct Volunteer {
    double view_prob = 0.3;
    double signup_prob = 0.5;
    int max_assignments = 30; // per recruiting post, >= 1
    double completion_prob = 0.85;
    ExposureResponse response;
    DelayModel delays;
};

using ProtocolSpec = std::variant<TransientCopy, PersistentCopy, Nomination, Volunteer>;

enum class ProtocolKind { TransientCopy, PersistentCopy, Nomination, Volunteer };

ProtocolKind kind_of(const ProtocolSpec& spec);
std::string protocol_name(ProtocolKind kind);
ProtocolKind protocol_from_name(const std::string& name);

const ExposureResponse& response_of(const ProtocolSpec& spec);
ExposureResponse& response_of(ProtocolSpec& spec);
const DelayModel& delays_of(const ProtocolSpec& spec);
double view_prob_of(const ProtocolSpec& spec);

/// Shipped default parameterization for each protocol. Delay medians follow
/// the observed per-protocol adoption delays; response shapes follow the
/// observed simple/complex diffusion directions.
ProtocolSpec default_protocol(ProtocolKind kind);

/// Default simulation window for reproduction-number calibration; stops
/// while the cascade is still in free growth.
double calibration_horizon(const ProtocolSpec& spec);

/// Bounded tie-strength proxy: m / (1 + m) for m mutual friends.
inline double tie_strength_norm(int mutual_friends) {
    return static_cast<double>(mutual_friends) / (1.0 + static_cast<double>(mutual_friends));
}

struct ExposureTarget {
    NodeId node;
    bool targeted; // explicitly called out (nominations)
};

/// Who a fresh post by `adopter` reaches. Copy and volunteer protocols
/// broadcast to all friends; nominations pick min(fanout, degree) friends
/// uniformly without replacement.
std::vector<ExposureTarget> exposure_targets(const ProtocolSpec& spec, NodeId adopter,
                                             const SocialGraph& graph, Rng& rng);

/// p = base · g(k) · (1 + tie_boost·tie) · (1 + social_cost_boost if targeted),
/// clamped to [0,1]. g is 1 (flat), k^-s (decreasing), or min(k^s, cap)
/// with g(1)=1 (increasing). Page viewers get the page_rate_scale factor.
double adoption_probability(const ExposureResponse& response, int exposure_count,
                            double tie_strength_norm, bool targeted,
                            bool viewer_is_page = false);

enum class DelayKind { View, Effort };

/// Strictly positive log-normal sample around the configured median.
double sample_delay(const DelayModel& delays, DelayKind kind, Rng& rng);

} // namespace cascade
