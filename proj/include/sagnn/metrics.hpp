#pragma once

#include <span>
#include <string>
#include <vector>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/scheduling.hpp"

namespace sagnn {

struct LinkViolation {
    std::size_t link = 0;
    double level = 0.0;
    friend bool operator==(const LinkViolation&, const LinkViolation&) = default;
};

/// Aggregates of one run of T binary schedules on one graph.
struct MetricsRecord {
    std::string graph_id;
    double delta = 0.0;
    std::size_t n_links = 0;
    std::size_t horizon = 0;
    std::vector<double> avg_success;      // per link, time averaged
    double avg_success_fraction = 0.0;    // mean over links of avg_success
    double objective_fraction = 0.0;      // successful transmissions / (K T)
    double total_transmissions = 0.0;     // scheduled link-slots over the horizon
    double successful_transmissions = 0.0;
    std::vector<LinkViolation> violations;  // links with violation level > 0
    double mean_violation = 0.0;            // mean over links of max(level, 0)

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// `delta` is the uniform requirement used for the record's label; `req`
/// carries the per-link values.
MetricsRecord compute_metrics(const ConflictGraph& graph, std::span<const Schedule> schedules,
                              const Requirements& req, std::string graph_id, double delta);

}  // namespace sagnn
