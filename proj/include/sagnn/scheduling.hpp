#pragma once

#include <span>
#include <vector>

#include "sagnn/conflict_graph.hpp"

namespace sagnn {

enum class ScheduleMode { Binary, Relaxed };

/// Per-step decision vector s(t). Binary entries are stored as 0.0 / 1.0 so
/// binary and relaxed schedules share every formula below.
class Schedule {
public:
    Schedule() = default;
    Schedule(std::vector<double> values, ScheduleMode mode);

    static Schedule zeros(std::size_t n) { return {std::vector<double>(n, 0.0), ScheduleMode::Binary}; }

    std::size_t size() const { return values_.size(); }
    ScheduleMode mode() const { return mode_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    operator std::span<const double>() const { return values_; }

    friend bool operator==(const Schedule&, const Schedule&) = default;

private:
    std::vector<double> values_;
    ScheduleMode mode_ = ScheduleMode::Binary;
};

/// Minimum time-averaged successful transmissions per link.
struct Requirements {
    std::vector<double> delta;

    static Requirements uniform(std::size_t n_links, double value);
    std::size_t size() const { return delta.size(); }
};

/// [1 - A s]_+
std::vector<double> success_indicator(const ConflictGraph& graph, std::span<const double> s);

/// s (.) [1 - A s]_+
std::vector<double> successful_transmissions(const ConflictGraph& graph, std::span<const double> s);

/// s^T [1 - A s]_+ ; the number of successful links for binary s.
double objective(const ConflictGraph& graph, std::span<const double> s);

/// (1/T) sum_t successful_transmissions(s(t))
std::vector<double> time_avg_success(const ConflictGraph& graph, std::span<const Schedule> schedules);

/// s^T[1-As]_+ + lambda^T (s (.) [1-As]_+ - delta)
double per_step_lagrangian(const ConflictGraph& graph, std::span<const double> s, std::span<const double> lambda,
                           const Requirements& req);

/// (1/T) sum_t s^T[1-As]_+ + lambda^T((1/T) sum_t s (.) [1-As]_+ - delta)
double horizon_lagrangian(const ConflictGraph& graph, std::span<const Schedule> schedules,
                          std::span<const double> lambda, const Requirements& req);

/// (delta - avg_success) / delta per link; 0 where delta is 0.
std::vector<double> violation_level(std::span<const double> avg_success, const Requirements& req);

}  // namespace sagnn
