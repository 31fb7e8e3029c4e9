#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fopid/fracnum.hpp"
#include "fopid/lqr_fopid.hpp"

namespace fopid::sim {

// Objective value assigned to any failed design (CARE failure, divergence, bad vars).
inline constexpr double kPenalty = 1e6;

struct Scenario {
    double setpoint = 1.0;
    double horizon = 100.0;  // seconds
    double step = 0.01;      // seconds
    double disturbance_time = 70.0;
    double disturbance_magnitude = 0.1; // input-additive step

    // Unit set-point change without disturbance: the protocol behind ITSE/ISDCO.
    static Scenario objective() noexcept;
    // Set-point change followed by a late load disturbance (time-response figures).
    static Scenario figure() noexcept;

    // Throws std::invalid_argument unless horizon/step is an integer count and both are positive.
    void validate() const;
    [[nodiscard]] std::size_t sample_count() const;
};

enum class SimulationMethod {
    Oustaloup,        // rational-filter state space, O(N) per run
    GrunwaldLetnikov, // full-memory GL convolution, O(N^2); accuracy oracle
};

struct SimOptions {
    SimulationMethod method = SimulationMethod::Oustaloup;
    fracnum::FrequencyBand band{};
    int approx_order = 5;
    std::optional<std::size_t> gl_memory; // GL short-memory truncation; empty = full
};

struct SimResult {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> u;
    std::vector<double> x1; // I^λ e
    std::vector<double> x2; // e
    std::vector<double> x3; // D^μ e
    double itse = 0.0;
    double isdco = 0.0;
    bool diverged = false;
};

struct PerformanceIndices {
    double itse = 0.0;
    double isdco = 0.0;
};

struct ObjectivePair {
    double itse = kPenalty;
    double isdco = kPenalty;

    [[nodiscard]] bool penalized() const noexcept { return itse >= kPenalty || isdco >= kPenalty; }
};

// |y| beyond this (relative to max(1, |r|)) marks a run as diverged.
inline constexpr double kDivergenceFactor = 1e3;

// Unit step on the plant input at t = 0 (applied after the delay L). Fills t, y, u;
// the state trajectories stay empty. The Oustaloup path is exact for integer α.
[[nodiscard]] SimResult simulate_open_loop_step(const lqr::NioptdPlant& plant, double horizon, double step,
                                                const SimOptions& options = {});

// K e^{-jωL} / (T (jω)^α + 1) on the principal branch. Throws for ω <= 0.
[[nodiscard]] std::complex<double> frequency_response(const lqr::NioptdPlant& plant, double omega);

// Left-rectangle quadrature over t_k = k h for t_k < horizon:
//   ITSE = Σ t_k e_k^2 h,  ISDCO = Σ (u_k - u_ss)^2 h
[[nodiscard]] PerformanceIndices performance_indices(std::span<const double> error,
                                                     std::span<const double> control,
                                                     double u_ss, double step, double horizon);

// FOPID loop around the delayed plant; see README for the discretisation.
[[nodiscard]] SimResult simulate_closed_loop(const lqr::NioptdPlant& plant,
                                             const lqr::FopidController& controller,
                                             const Scenario& scenario,
                                             const SimOptions& options = {});

// design_from_vars -> simulate_closed_loop -> (ITSE, ISDCO); every failure becomes
// the (kPenalty, kPenalty) pair.
[[nodiscard]] ObjectivePair evaluate_design_objectives(const lqr::NioptdPlant& plant,
                                                       const lqr::LqrDesignVars& vars,
                                                       lqr::DelayMethod method,
                                                       const Scenario& scenario = Scenario::objective(),
                                                       const SimOptions& options = {});

struct SweepCell {
    double delay = 0.0;
    double time_constant = 0.0;
    double itse = 0.0;
    double isdco = 0.0;
    bool diverged = false;
};

// Row-major over delay_grid (outer) then time_constant_grid (inner).
[[nodiscard]] std::vector<SweepCell> robustness_sweep(const lqr::NioptdPlant& nominal,
                                                      const lqr::FopidController& controller,
                                                      std::span<const double> delay_grid,
                                                      std::span<const double> time_constant_grid,
                                                      const Scenario& scenario = Scenario::objective(),
                                                      const SimOptions& options = {});

void write_trajectory_csv(std::ostream& out, const SimResult& result);
void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells);

} // namespace fopid::sim
