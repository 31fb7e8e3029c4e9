#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fopid/lqr_fopid.hpp"
#include "fopid/simkit.hpp"

namespace fopid::moo {

enum class DominanceRule {
    Strict,   // u_i < v_i for every i
    Standard, // u_i <= v_i for every i, with at least one strict
};

// Throws std::invalid_argument on a dimension mismatch.
[[nodiscard]] bool dominates(std::span<const double> u, std::span<const double> v,
                             DominanceRule rule = DominanceRule::Strict);

using ObjectiveMatrix = std::vector<std::vector<double>>;
using Fronts = std::vector<std::vector<std::size_t>>;

// Fronts of indices into `objectives`; front 0 is non-dominated. Each index appears once.
[[nodiscard]] Fronts fast_nondominated_sort(const ObjectiveMatrix& objectives,
                                            DominanceRule rule = DominanceRule::Standard);

// Per-member crowding distance for one front; extremes are +inf, an objective with
// zero range adds nothing.
[[nodiscard]] std::vector<double> crowding_distance(const ObjectiveMatrix& front);

struct Bounds {
    std::vector<double> low;
    std::vector<double> high;

    [[nodiscard]] std::size_t dimension() const noexcept { return low.size(); }
    void validate() const;
    void clamp(std::span<double> x) const noexcept;
};

// {Q1, Q2, Q3, R} in [0, 100], {λ, μ} in [0, 2].
[[nodiscard]] Bounds lqr_search_bounds();

struct EarlyStop {
    std::size_t window = 10;
    double tolerance = 1e-4;
};

struct MooConfig {
    std::size_t population = 100;
    std::size_t generations = 100;
    double pareto_fraction = 0.7;
    double crossover_fraction = 0.8;
    double mutation_scale = 0.1;
    std::uint64_t seed = 1;
    Bounds bounds = lqr_search_bounds();
    std::optional<EarlyStop> early_stop;
    unsigned threads = 0; // 0 = hardware concurrency

    void validate() const;
};

// Independent generator for (stream, index), derived from the master seed.
[[nodiscard]] std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

// w_i p1_i + (1 - w_i) p2_i per coordinate.
[[nodiscard]] std::vector<double> intermediate_crossover(std::span<const double> p1, std::span<const double> p2,
                                                         std::span<const double> weights);

// Adds U(-scale (high-low), +scale (high-low)) to one uniformly chosen coordinate.
void mutate(std::span<double> x, const Bounds& bounds, double scale, std::mt19937_64& rng);

struct Individual {
    std::vector<double> x;
    std::vector<double> f;
    std::size_t rank = 0;
    double crowding = 0.0;
};

// Binary tournament on (rank asc, crowding desc).
[[nodiscard]] std::size_t tournament(std::span<const Individual> pool, std::mt19937_64& rng);

// One child per call: crossover with probability crossover_fraction, otherwise a
// mutated copy of the first parent. Always clamped.
[[nodiscard]] std::vector<double> make_child(std::span<const Individual> pool, const MooConfig& config,
                                             std::mt19937_64& rng);

[[nodiscard]] std::vector<std::vector<double>> make_offspring(std::span<const Individual> pool,
                                                              const MooConfig& config,
                                                              std::uint64_t generation);

// Picks the next generation of `capacity` from ranked candidates: fronts in order,
// front 0 capped at pareto_fraction of capacity, the overflowing front cut by crowding.
[[nodiscard]] std::vector<Individual> select_survivors(std::vector<Individual> candidates, std::size_t capacity,
                                                       double pareto_fraction);

using ObjectiveFn = std::function<std::vector<double>(std::span<const double>)>;

struct OptimizeResult {
    std::vector<Individual> population;
    std::vector<Individual> front;            // rank-0 members of the final population
    std::vector<std::vector<double>> best;    // per generation, min of each objective
    std::size_t generations_run = 0;
};

// Elitist (μ+λ) NSGA-II. `objective` must be thread-safe.
[[nodiscard]] OptimizeResult optimize(const ObjectiveFn& objective, const MooConfig& config);

struct FrontEntry {
    lqr::LqrDesignVars vars;
    sim::ObjectivePair objectives;
    lqr::FopidController controller;
};

struct ParetoFront {
    std::vector<FrontEntry> entries; // ascending J1
    lqr::DelayMethod method = lqr::DelayMethod::He;
    lqr::NioptdPlant plant;
};

// Penalised and duplicate points are dropped; entries sorted by J1.
[[nodiscard]] ParetoFront run_nsga2(const lqr::NioptdPlant& plant, lqr::DelayMethod method,
                                    const MooConfig& config,
                                    const sim::Scenario& scenario = sim::Scenario::objective(),
                                    const sim::SimOptions& options = {});

// Runs `restarts` seeds (seed, seed+1, ...) and keeps the front with the largest
// share of points left non-dominated by the union of all runs.
[[nodiscard]] ParetoFront run_nsga2_restarts(const lqr::NioptdPlant& plant, lqr::DelayMethod method,
                                             const MooConfig& config, std::size_t restarts,
                                             const sim::Scenario& scenario = sim::Scenario::objective(),
                                             const sim::SimOptions& options = {});

// Index floor((n-1)/2) of the J1-sorted front. Throws std::invalid_argument when empty.
[[nodiscard]] const FrontEntry& median_solution(const ParetoFront& front);

enum class FrontVerdict { CaiDominant, HeDominant, Weak };

[[nodiscard]] std::string_view to_string(FrontVerdict verdict) noexcept;

// First argument plays "cai", second "he". Strict dominance.
[[nodiscard]] FrontVerdict compare_fronts(const ObjectiveMatrix& cai, const ObjectiveMatrix& he);
[[nodiscard]] FrontVerdict compare_fronts(const ParetoFront& cai, const ParetoFront& he);

[[nodiscard]] ObjectiveMatrix objective_matrix(const ParetoFront& front);

// J1_itse,J2_isdco,Q1,Q2,Q3,R,lambda,mu,Kp,Ki,Kd,method
void write_front_csv(std::ostream& out, const ParetoFront& front);

} // namespace fopid::moo
