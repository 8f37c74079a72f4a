#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagnn/conflict_graph.hpp"
#include "sagnn/random.hpp"
#include "sagnn/scheduling.hpp"

namespace sagnn {

enum class BaselineKind { PPersistent, MisRandom };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::PPersistent;
    bool collision_avoidance = false;
    std::size_t horizon = 200;
    std::uint64_t seed = 0;
    /// p_i = (1 + d_i)^-exponent
    double persistence_exponent = 1.0;

    void validate() const;
};

/// Each link transmits independently with p_i = (1 + d_i)^-exponent.
std::vector<Schedule> p_persistent_schedule(const ConflictGraph& graph, const BaselineConfig& cfg);

/// Visits the scheduled conflicting pairs in random order and switches one
/// link of each still-conflicting pair off, chosen by a fair coin.
Schedule resolve_collisions(const ConflictGraph& graph, const Schedule& s, Rng& rng);

/// Maximal independent set from a greedy pass in ascending degree order (ties by index).
std::vector<std::size_t> greedy_mis(const ConflictGraph& graph);

inline constexpr std::size_t kExactMisMaxLinks = 30;

/// Maximum independent set by branch and bound; K <= 30.
std::vector<std::size_t> exact_mis(const ConflictGraph& graph);

/// Schedules a uniformly random subset of M = |greedy_mis| links each step.
std::vector<Schedule> mis_random_schedule(const ConflictGraph& graph, const BaselineConfig& cfg);

std::vector<Schedule> run_baseline(const ConflictGraph& graph, const BaselineConfig& cfg);

/// "p_persistent", "p_persistent_ca", "mis_random", "mis_random_ca"
std::string baseline_label(const BaselineConfig& cfg);
BaselineKind parse_baseline_kind(const std::string& s);

}  // namespace sagnn
