#include "sagnn/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sagnn {
namespace {

void require_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw std::invalid_argument(std::string(what) + ": length " + std::to_string(got) + " != K " +
                                    std::to_string(want));
}

}  // namespace

Schedule::Schedule(std::vector<double> values, ScheduleMode mode) : values_(std::move(values)), mode_(mode) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        const bool ok = mode == ScheduleMode::Binary ? (v == 0.0 || v == 1.0) : (v >= 0.0 && v <= 1.0);
        if (!ok)
            throw std::invalid_argument("schedule entry " + std::to_string(i) + " = " + std::to_string(v) +
                                        (mode == ScheduleMode::Binary ? " is not binary" : " outside [0,1]"));
    }
}

Requirements Requirements::uniform(std::size_t n_links, double value) {
    if (!(value >= 0.0)) throw std::invalid_argument("requirement must be nonnegative");
    return {std::vector<double>(n_links, value)};
}

std::vector<double> success_indicator(const ConflictGraph& graph, std::span<const double> s) {
    require_length(s.size(), graph.n_links(), "success_indicator");
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double load = 0.0;
        for (std::size_t j : graph.neighbors(i)) load += s[j];
        out[i] = std::max(0.0, 1.0 - load);
    }
    return out;
}

std::vector<double> successful_transmissions(const ConflictGraph& graph, std::span<const double> s) {
    auto out = success_indicator(graph, s);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s[i];
    return out;
}

double objective(const ConflictGraph& graph, std::span<const double> s) {
    double total = 0.0;
    for (double v : successful_transmissions(graph, s)) total += v;
    return total;
}

std::vector<double> time_avg_success(const ConflictGraph& graph, std::span<const Schedule> schedules) {
    if (schedules.empty()) throw std::invalid_argument("time_avg_success: empty schedule list");
    std::vector<double> acc(graph.n_links(), 0.0);
    for (const auto& s : schedules) {
        const auto succ = successful_transmissions(graph, s);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += succ[i];
    }
    const double inv_t = 1.0 / static_cast<double>(schedules.size());
    for (double& v : acc) v *= inv_t;
    return acc;
}

double per_step_lagrangian(const ConflictGraph& graph, std::span<const double> s, std::span<const double> lambda,
                           const Requirements& req) {
    require_length(lambda.size(), graph.n_links(), "per_step_lagrangian lambda");
    require_length(req.size(), graph.n_links(), "per_step_lagrangian requirements");
    for (std::size_t i = 0; i < lambda.size(); ++i)
        if (!(lambda[i] >= 0.0))
            throw std::invalid_argument("per_step_lagrangian: lambda[" + std::to_string(i) + "] is negative");
    const auto succ = successful_transmissions(graph, s);
    double value = 0.0;
    for (std::size_t i = 0; i < succ.size(); ++i) value += succ[i] + lambda[i] * (succ[i] - req.delta[i]);
    return value;
}

double horizon_lagrangian(const ConflictGraph& graph, std::span<const Schedule> schedules,
                          std::span<const double> lambda, const Requirements& req) {
    require_length(lambda.size(), graph.n_links(), "horizon_lagrangian lambda");
    require_length(req.size(), graph.n_links(), "horizon_lagrangian requirements");
    const auto avg = time_avg_success(graph, schedules);
    double value = 0.0;
    for (std::size_t i = 0; i < avg.size(); ++i) value += avg[i] + lambda[i] * (avg[i] - req.delta[i]);
    return value;
}

std::vector<double> violation_level(std::span<const double> avg_success, const Requirements& req) {
    require_length(avg_success.size(), req.size(), "violation_level");
    std::vector<double> out(avg_success.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        if (req.delta[i] > 0.0) out[i] = (req.delta[i] - avg_success[i]) / req.delta[i];
    return out;
}

}  // namespace sagnn
