#include "sagnn/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace sagnn {

MetricsRecord compute_metrics(const ConflictGraph& graph, std::span<const Schedule> schedules,
                              const Requirements& req, std::string graph_id, double delta) {
    if (schedules.empty()) throw std::invalid_argument("compute_metrics: empty schedule list");
    MetricsRecord m;
    m.graph_id = std::move(graph_id);
    m.delta = delta;
    m.n_links = graph.n_links();
    m.horizon = schedules.size();

    double scheduled = 0.0;
    double succeeded = 0.0;
    for (const auto& s : schedules) {
        if (s.mode() != ScheduleMode::Binary) throw std::invalid_argument("compute_metrics: expects binary schedules");
        for (double v : s.values()) scheduled += v;
        for (double v : successful_transmissions(graph, s)) succeeded += v;
    }
    m.total_transmissions = scheduled;
    m.successful_transmissions = succeeded;

    m.avg_success = time_avg_success(graph, schedules);
    const double k = static_cast<double>(m.n_links);
    double sum = 0.0;
    for (double v : m.avg_success) sum += v;
    m.avg_success_fraction = sum / k;
    m.objective_fraction = succeeded / (k * static_cast<double>(m.horizon));

    const auto levels = violation_level(m.avg_success, req);
    double positive = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] > 0.0) {
            m.violations.push_back({i, levels[i]});
            positive += levels[i];
        }
    }
    m.mean_violation = positive / k;
    return m;
}

}  // namespace sagnn
