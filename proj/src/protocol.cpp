#include "cascade/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/util.hpp"

namespace cascade {

namespace {
// Saturation point of the increasing response; keeps g bounded before the
// final [0,1] clamp so calibration has a stable handle.
constexpr double kIncreasingCap = 16.0;
} // namespace

std::string shape_name(ResponseShape s) {
    switch (s) {
        case ResponseShape::Flat: return "flat";
        case ResponseShape::Decreasing: return "decreasing";
        case ResponseShape::Increasing: return "increasing";
    }
    return "flat";
}

ResponseShape shape_from_name(const std::string& name) {
    if (name == "flat") return ResponseShape::Flat;
    if (name == "decreasing") return ResponseShape::Decreasing;
    if (name == "increasing") return ResponseShape::Increasing;
    throw InvalidArgument("unknown response shape: " + name);
}

ProtocolKind kind_of(const ProtocolSpec& spec) {
    return static_cast<ProtocolKind>(spec.index());
}

std::string protocol_name(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::TransientCopy: return "transient_copy";
        case ProtocolKind::PersistentCopy: return "persistent_copy";
        case ProtocolKind::Nomination: return "nomination";
        case ProtocolKind::Volunteer: return "volunteer";
    }
    return "transient_copy";
}

ProtocolKind protocol_from_name(const std::string& name) {
    if (name == "transient_copy") return ProtocolKind::TransientCopy;
    if (name == "persistent_copy") return ProtocolKind::PersistentCopy;
    if (name == "nomination") return ProtocolKind::Nomination;
    if (name == "volunteer") return ProtocolKind::Volunteer;
    throw InvalidArgument("unknown protocol: " + name);
}

const ExposureResponse& response_of(const ProtocolSpec& spec) {
    return std::visit([](const auto& s) -> const ExposureResponse& { return s.response; }, spec);
}

ExposureResponse& response_of(ProtocolSpec& spec) {
    return std::visit([](auto& s) -> ExposureResponse& { return s.response; }, spec);
}

const DelayModel& delays_of(const ProtocolSpec& spec) {
    return std::visit([](const auto& s) -> const DelayModel& { return s.delays; }, spec);
}

double view_prob_of(const ProtocolSpec& spec) {
    return std::visit([](const auto& s) { return s.view_prob; }, spec);
}

ProtocolSpec default_protocol(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::TransientCopy: {
            TransientCopy p;
            p.view_prob = 0.35;
            p.visibility_window = 21600.0; // 6 h
            p.response = {0.25, ResponseShape::Decreasing, 1.0, 0.0, 0.0};
            p.delays = {60.0, 22.5, 0.75};
            return p;
        }
        case ProtocolKind::PersistentCopy: {
            PersistentCopy p;
            p.view_prob = 0.22;
            p.visibility_window = 129600.0; // 1.5 d
            p.repeat_view_rate = 1.0 / 43200.0; // about two repeat views per day
            p.response = {0.12, ResponseShape::Increasing, 0.4, 4.0, 0.0};
            p.delays = {60.0, 153.0, 0.75};
            return p;
        }
        case ProtocolKind::Nomination: {
            Nomination p;
            p.fanout = 5;
            p.view_prob = 0.98;
            p.response = {0.12, ResponseShape::Decreasing, 1.0, 5.0, 0.6, 0.0};
            p.delays = {60.0, 4.42e4, 0.75};
            return p;
        }
        case ProtocolKind::Volunteer: {
            Volunteer p;
            p.view_prob = 0.40;
            p.signup_prob = 0.40;
            p.max_assignments = 6;
            p.completion_prob = 0.85;
            p.response = {0.30, ResponseShape::Increasing, 1.0, 2.5, 0.0, 0.0};
            p.delays = {60.0, 1.31e4, 0.75};
            return p;
        }
    }
    throw InvalidArgument("unknown protocol kind");
}

double calibration_horizon(const ProtocolSpec& spec) {
    // Measurement window for reproduction-number calibration: long enough
    // for a few thousand adoptions near the target R, short enough that the
    // cascade never exhausts the graph (saturation turns late adopters into
    // forced leaves and biases R downward).
    switch (kind_of(spec)) {
        case ProtocolKind::TransientCopy: return 20000.0;
        case ProtocolKind::PersistentCopy: return 36000.0;
        case ProtocolKind::Nomination: return 300000.0;
        case ProtocolKind::Volunteer: return 250000.0;
    }
    return 86400.0;
}

std::vector<ExposureTarget> exposure_targets(const ProtocolSpec& spec, NodeId adopter,
                                             const SocialGraph& graph, Rng& rng) {
    const auto friends = graph.neighbors(adopter);
    std::vector<ExposureTarget> out;
    if (const auto* nom = std::get_if<Nomination>(&spec)) {
        const auto degree = friends.size();
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(nom->fanout), degree);
        // Partial Fisher-Yates over a scratch copy of the friend list.
        std::vector<NodeId> pool(friends.begin(), friends.end());
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back({pool[i], true});
        }
        return out;
    }
    out.reserve(friends.size());
    for (NodeId f : friends) out.push_back({f, false});
    return out;
}

double adoption_probability(const ExposureResponse& response, int exposure_count,
                            double tie_strength_norm, bool targeted, bool viewer_is_page) {
    if (exposure_count < 1) throw InvalidArgument("exposure_count must be >= 1");
    const double k = static_cast<double>(exposure_count);
    double g = 1.0;
    switch (response.shape) {
        case ResponseShape::Flat: break;
        case ResponseShape::Decreasing: g = std::pow(1.0 / k, response.shape_strength); break;
        case ResponseShape::Increasing:
            g = std::min(std::pow(k, response.shape_strength), kIncreasingCap);
            break;
    }
    double p = response.base_rate * g * (1.0 + response.tie_boost * tie_strength_norm);
    if (targeted) p *= 1.0 + response.social_cost_boost;
    if (viewer_is_page) p *= response.page_rate_scale;
    return std::clamp(p, 0.0, 1.0);
}

double sample_delay(const DelayModel& delays, DelayKind kind, Rng& rng) {
    const double median =
        kind == DelayKind::View ? delays.view_delay_median : delays.effort_delay_median;
    if (median <= 0) throw InvalidArgument("delay medians must be > 0");
    return rng.lognormal_median(median, delays.dispersion);
}

} // namespace cascade
