#include "fopid/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "fopid/csv.hpp"

namespace fopid::moo {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void assign_ranks(std::vector<Individual>& pop) {
    ObjectiveMatrix objs;
    objs.reserve(pop.size());
    for (const auto& ind : pop)
        objs.push_back(ind.f);
    const auto fronts = fast_nondominated_sort(objs);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        ObjectiveMatrix sub;
        for (auto i : fronts[r])
            sub.push_back(pop[i].f);
        const auto cd = crowding_distance(sub);
        for (std::size_t j = 0; j < fronts[r].size(); ++j) {
            pop[fronts[r][j]].rank = r;
            pop[fronts[r][j]].crowding = cd[j];
        }
    }
}

void evaluate_all(const ObjectiveFn& objective, std::vector<Individual>& pop, std::size_t first, unsigned threads) {
    const std::size_t count = pop.size() - first;
    if (count == 0)
        return;
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = first; i < pop.size(); ++i)
            pop[i].f = objective(pop[i].x);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = first + w; i < pop.size(); i += workers)
                pop[i].f = objective(pop[i].x);
        });
    }
    for (auto& t : pool)
        t.join();
}

// Mean gap between J1-sorted neighbours of the rank-0 set, relative to its extent.
double front_spread(const std::vector<Individual>& pop) {
    std::vector<std::vector<double>> pts;
    for (const auto& ind : pop)
        if (ind.rank == 0)
            pts.push_back(ind.f);
    if (pts.size() < 2)
        return 0.0;
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t m = 0; m < pts[i].size(); ++m)
            d2 += (pts[i][m] - pts[i - 1][m]) * (pts[i][m] - pts[i - 1][m]);
        total += std::sqrt(d2);
    }
    double extent = 0.0;
    for (std::size_t m = 0; m < pts.front().size(); ++m)
        extent += std::abs(pts.back()[m] - pts.front()[m]);
    return extent > 0.0 ? total / extent : 0.0;
}

} // namespace

bool dominates(std::span<const double> u, std::span<const double> v, DominanceRule rule) {
    if (u.size() != v.size())
        throw std::invalid_argument("dominates: objective vectors differ in dimension");
    if (rule == DominanceRule::Strict) {
        if (u.empty())
            return false;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (!(u[i] < v[i]))
                return false;
        return true;
    }
    bool better = false;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > v[i])
            return false;
        if (u[i] < v[i])
            better = true;
    }
    return better;
}

Fronts fast_nondominated_sort(const ObjectiveMatrix& objectives, DominanceRule rule) {
    const std::size_t n = objectives.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> counts(n, 0);
    Fronts fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(objectives[p], objectives[q], rule)) {
                dominated[p].push_back(q);
                ++counts[q];
            } else if (dominates(objectives[q], objectives[p], rule)) {
                dominated[q].push_back(p);
                ++counts[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (counts[p] == 0)
            fronts[0].push_back(p);
    for (std::size_t k = 0; k < fronts.size() && !fronts[k].empty(); ++k) {
        std::vector<std::size_t> next;
        for (auto p : fronts[k])
            for (auto q : dominated[p])
                if (--counts[q] == 0)
                    next.push_back(q);
        if (next.empty())
            break;
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    if (n == 0)
        fronts.clear();
    return fronts;
}

std::vector<double> crowding_distance(const ObjectiveMatrix& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0)
        return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    const std::size_t m = front[0].size();
    std::vector<std::size_t> order(n);
    for (std::size_t obj = 0; obj < m; ++obj) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][obj] < front[b][obj]; });
        const double lo = front[order.front()][obj];
        const double hi = front[order.back()][obj];
        dist[order.front()] = std::numeric_limits<double>::infinity();
        dist[order.back()] = std::numeric_limits<double>::infinity();
        const double range = hi - lo;
        if (!(range > 0.0) || !std::isfinite(range))
            continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            dist[order[i]] += (front[order[i + 1]][obj] - front[order[i - 1]][obj]) / range;
    }
    return dist;
}

void Bounds::validate() const {
    if (low.size() != high.size() || low.empty())
        throw std::invalid_argument("bounds: low/high must be non-empty and equal length");
    for (std::size_t i = 0; i < low.size(); ++i)
        if (!std::isfinite(low[i]) || !std::isfinite(high[i]) || low[i] > high[i])
            throw std::invalid_argument("bounds: need finite low <= high");
}

void Bounds::clamp(std::span<double> x) const noexcept {
    for (std::size_t i = 0; i < x.size() && i < low.size(); ++i)
        x[i] = std::clamp(x[i], low[i], high[i]);
}

Bounds lqr_search_bounds() {
    return Bounds{{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, {100.0, 100.0, 100.0, 100.0, 2.0, 2.0}};
}

void MooConfig::validate() const {
    bounds.validate();
    if (population < 4)
        throw std::invalid_argument("population must be at least 4");
    if (generations < 1)
        throw std::invalid_argument("generations must be at least 1");
    if (!(pareto_fraction > 0.0 && pareto_fraction <= 1.0))
        throw std::invalid_argument("pareto fraction must lie in (0, 1]");
    if (!(crossover_fraction >= 0.0 && crossover_fraction <= 1.0))
        throw std::invalid_argument("crossover fraction must lie in [0, 1]");
    if (!(mutation_scale >= 0.0) || !std::isfinite(mutation_scale))
        throw std::invalid_argument("mutation scale must be >= 0");
    if (early_stop && (early_stop->window < 1 || !(early_stop->tolerance >= 0.0)))
        throw std::invalid_argument("early stop needs window >= 1 and tolerance >= 0");
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state) ^ (stream * 0xd1b54a32d192ed03ULL);
    std::uint64_t b = splitmix64(a) ^ (index * 0x8cb92ba72f3d8dd7ULL);
    return std::mt19937_64(splitmix64(b));
}

std::vector<double> intermediate_crossover(std::span<const double> p1, std::span<const double> p2,
                                           std::span<const double> weights) {
    if (p1.size() != p2.size() || p1.size() != weights.size())
        throw std::invalid_argument("crossover: parents and weights differ in length");
    std::vector<double> child(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i)
        child[i] = p2[i] + weights[i] * (p1[i] - p2[i]);
    return child;
}

void mutate(std::span<double> x, const Bounds& bounds, double scale, std::mt19937_64& rng) {
    if (x.empty())
        return;
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    const std::size_t i = pick(rng);
    const double width = scale * (bounds.high[i] - bounds.low[i]);
    std::uniform_real_distribution<double> step(-width, width);
    x[i] += step(rng);
}

std::size_t tournament(std::span<const Individual> pool, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    const auto& ia = pool[a];
    const auto& ib = pool[b];
    if (ia.rank != ib.rank)
        return ia.rank < ib.rank ? a : b;
    return ia.crowding >= ib.crowding ? a : b;
}

std::vector<double> make_child(std::span<const Individual> pool, const MooConfig& config, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& p1 = pool[tournament(pool, rng)].x;
    std::vector<double> child;
    if (unit(rng) < config.crossover_fraction) {
        const auto& p2 = pool[tournament(pool, rng)].x;
        std::vector<double> w(p1.size());
        for (auto& wi : w)
            wi = unit(rng);
        child = intermediate_crossover(p1, p2, w);
    } else {
        child = p1;
        mutate(child, config.bounds, config.mutation_scale, rng);
    }
    config.bounds.clamp(child);
    return child;
}

std::vector<std::vector<double>> make_offspring(std::span<const Individual> pool, const MooConfig& config,
                                                std::uint64_t generation) {
    std::vector<std::vector<double>> children;
    children.reserve(config.population);
    for (std::size_t i = 0; i < config.population; ++i) {
        auto rng = derived_rng(config.seed, generation + 1, i);
        children.push_back(make_child(pool, config, rng));
    }
    return children;
}

std::vector<Individual> select_survivors(std::vector<Individual> candidates, std::size_t capacity,
                                         double pareto_fraction) {
    assign_ranks(candidates);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (candidates[a].rank != candidates[b].rank)
            return candidates[a].rank < candidates[b].rank;
        return candidates[a].crowding > candidates[b].crowding;
    });

    const auto front_cap = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(pareto_fraction * static_cast<double>(capacity))));
    std::vector<Individual> next;
    next.reserve(capacity);
    std::vector<std::size_t> deferred;
    std::size_t taken_front0 = 0;
    for (auto i : order) {
        if (next.size() >= capacity)
            break;
        if (candidates[i].rank == 0) {
            if (taken_front0 >= front_cap) {
                deferred.push_back(i);
                continue;
            }
            ++taken_front0;
        }
        next.push_back(candidates[i]);
    }
    for (auto i : deferred) {
        if (next.size() >= capacity)
            break;
        next.push_back(candidates[i]);
    }
    assign_ranks(next);
    return next;
}

OptimizeResult optimize(const ObjectiveFn& objective, const MooConfig& config) {
    config.validate();
    const std::size_t dim = config.bounds.dimension();

    std::vector<Individual> pop(config.population);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        auto rng = derived_rng(config.seed, 0, i);
        pop[i].x.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            pop[i].x[d] = std::uniform_real_distribution<double>(config.bounds.low[d], config.bounds.high[d])(rng);
    }
    evaluate_all(objective, pop, 0, config.threads);
    assign_ranks(pop);

    OptimizeResult out;
    const auto record_best = [&] {
        std::vector<double> best(pop.front().f.size(), std::numeric_limits<double>::infinity());
        for (const auto& ind : pop)
            for (std::size_t m = 0; m < best.size(); ++m)
                best[m] = std::min(best[m], ind.f[m]);
        out.best.push_back(std::move(best));
    };
    record_best();

    std::vector<double> spreads{front_spread(pop)};
    std::size_t gen = 0;
    for (; gen < config.generations; ++gen) {
        auto children = make_offspring(pop, config, gen);
        const std::size_t first = pop.size();
        for (auto& c : children)
            pop.push_back(Individual{std::move(c), {}, 0, 0.0});
        evaluate_all(objective, pop, first, config.threads);
        pop = select_survivors(std::move(pop), config.population, config.pareto_fraction);
        record_best();

        if (config.early_stop) {
            spreads.push_back(front_spread(pop));
            const std::size_t w = config.early_stop->window;
            if (spreads.size() > w) {
                double change = 0.0;
                for (std::size_t k = spreads.size() - w; k < spreads.size(); ++k)
                    change += std::abs(spreads[k] - spreads[k - 1]);
                if (change / static_cast<double>(w) < config.early_stop->tolerance) {
                    ++gen;
                    break;
                }
            }
        }
    }
    out.generations_run = gen;
    for (const auto& ind : pop)
        if (ind.rank == 0)
            out.front.push_back(ind);
    out.population = std::move(pop);
    return out;
}

ParetoFront run_nsga2(const lqr::NioptdPlant& plant, lqr::DelayMethod method, const MooConfig& config,
                      const sim::Scenario& scenario, const sim::SimOptions& options) {
    plant.validate();
    scenario.validate();
    if (config.bounds.dimension() != lqr::LqrDesignVars::kDimension)
        throw std::invalid_argument("bounds must cover the six LQR design variables");

    const auto to_vars = [](std::span<const double> x) {
        std::array<double, lqr::LqrDesignVars::kDimension> a{};
        std::copy(x.begin(), x.end(), a.begin());
        return lqr::LqrDesignVars::from_array(a);
    };
    const ObjectiveFn fn = [&](std::span<const double> x) {
        const auto obj = sim::evaluate_design_objectives(plant, to_vars(x), method, scenario, options);
        return std::vector<double>{obj.itse, obj.isdco};
    };
    const auto result = optimize(fn, config);

    ParetoFront front;
    front.method = method;
    front.plant = plant;
    for (const auto& ind : result.front) {
        const sim::ObjectivePair obj{ind.f[0], ind.f[1]};
        if (obj.penalized())
            continue;
        const auto vars = to_vars(ind.x);
        front.entries.push_back({vars, obj, lqr::design_from_vars(plant, vars, method)});
    }
    std::stable_sort(front.entries.begin(), front.entries.end(), [](const FrontEntry& a, const FrontEntry& b) {
        if (a.objectives.itse != b.objectives.itse)
            return a.objectives.itse < b.objectives.itse;
        return a.objectives.isdco < b.objectives.isdco;
    });
    const auto same = [](const FrontEntry& a, const FrontEntry& b) {
        return a.objectives.itse == b.objectives.itse && a.objectives.isdco == b.objectives.isdco;
    };
    front.entries.erase(std::unique(front.entries.begin(), front.entries.end(), same), front.entries.end());
    return front;
}

ParetoFront run_nsga2_restarts(const lqr::NioptdPlant& plant, lqr::DelayMethod method, const MooConfig& config,
                               std::size_t restarts, const sim::Scenario& scenario,
                               const sim::SimOptions& options) {
    if (restarts == 0)
        throw std::invalid_argument("restarts must be at least 1");
    std::vector<ParetoFront> runs;
    for (std::size_t r = 0; r < restarts; ++r) {
        auto cfg = config;
        cfg.seed = config.seed + r;
        runs.push_back(run_nsga2(plant, method, cfg, scenario, options));
    }
    if (runs.size() == 1)
        return runs.front();

    std::size_t best = 0;
    double best_share = -1.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (runs[r].entries.empty())
            continue;
        std::size_t kept = 0;
        for (const auto& e : runs[r].entries) {
            const double mine[2] = {e.objectives.itse, e.objectives.isdco};
            bool beaten = false;
            for (std::size_t o = 0; o < runs.size() && !beaten; ++o) {
                if (o == r)
                    continue;
                for (const auto& other : runs[o].entries) {
                    const double theirs[2] = {other.objectives.itse, other.objectives.isdco};
                    if (dominates(theirs, mine, DominanceRule::Standard)) {
                        beaten = true;
                        break;
                    }
                }
            }
            kept += beaten ? 0 : 1;
        }
        const double share = static_cast<double>(kept) / static_cast<double>(runs[r].entries.size());
        if (share > best_share) {
            best_share = share;
            best = r;
        }
    }
    return runs[best];
}

const FrontEntry& median_solution(const ParetoFront& front) {
    if (front.entries.empty())
        throw std::invalid_argument("median_solution: front is empty");
    return front.entries[(front.entries.size() - 1) / 2];
}

std::string_view to_string(FrontVerdict verdict) noexcept {
    switch (verdict) {
    case FrontVerdict::CaiDominant: return "cai_dominant";
    case FrontVerdict::HeDominant: return "he_dominant";
    case FrontVerdict::Weak: return "weak";
    }
    return "weak";
}

FrontVerdict compare_fronts(const ObjectiveMatrix& cai, const ObjectiveMatrix& he) {
    const auto covers = [](const ObjectiveMatrix& a, const ObjectiveMatrix& b) {
        if (a.empty() || b.empty())
            return false;
        for (const auto& v : b) {
            const bool hit = std::any_of(a.begin(), a.end(), [&](const auto& u) { return dominates(u, v); });
            if (!hit)
                return false;
        }
        return true;
    };
    const bool cai_wins = covers(cai, he);
    const bool he_wins = covers(he, cai);
    if (cai_wins && !he_wins)
        return FrontVerdict::CaiDominant;
    if (he_wins && !cai_wins)
        return FrontVerdict::HeDominant;
    return FrontVerdict::Weak;
}

ObjectiveMatrix objective_matrix(const ParetoFront& front) {
    ObjectiveMatrix m;
    m.reserve(front.entries.size());
    for (const auto& e : front.entries)
        m.push_back({e.objectives.itse, e.objectives.isdco});
    return m;
}

FrontVerdict compare_fronts(const ParetoFront& cai, const ParetoFront& he) {
    return compare_fronts(objective_matrix(cai), objective_matrix(he));
}

void write_front_csv(std::ostream& out, const ParetoFront& front) {
    csv::Writer w(out);
    w.header({"J1_itse", "J2_isdco", "Q1", "Q2", "Q3", "R", "lambda", "mu", "Kp", "Ki", "Kd", "method"});
    const auto method = lqr::to_string(front.method);
    for (const auto& e : front.entries) {
        const auto& v = e.vars;
        const auto& c = e.controller;
        w.row({e.objectives.itse, e.objectives.isdco, v.state_weights[0], v.state_weights[1], v.state_weights[2],
               v.control_weight, v.integral_order, v.derivative_order, c.kp, c.ki, c.kd},
              {method});
    }
}

} // namespace fopid::moo
