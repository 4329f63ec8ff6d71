#include "crowdnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "crowdnav/errors.hpp"
#include "crowdnav/threading.hpp"

namespace crowdnav {

using nlohmann::json;

double spd(std::span<const Vec2> path_a, std::span<const Vec2> path_b) {
    if (path_a.empty() || path_b.empty()) throw UserError("spd: paths must be nonempty");
    const std::size_t n = std::max(path_a.size(), path_b.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = path_a[std::min(i, path_a.size() - 1)];
        const Vec2 b = path_b[std::min(i, path_b.size() - 1)];
        total += (a - b).norm2();
    }
    return total;
}

double dtw(std::span<const Vec2> path_a, std::span<const Vec2> path_b) {
    if (path_a.empty() || path_b.empty()) throw UserError("dtw: paths must be nonempty");
    const std::size_t n = path_a.size();
    const std::size_t m = path_b.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // Rolling row of the standard DP table; the virtual (0,0) cell costs 0
    // and the rest of row/column 0 is unreachable.
    std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = kInf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost = distance(path_a[i - 1], path_b[j - 1]);
            cur[j] = std::min({prev[j], cur[j - 1], prev[j - 1]}) + cost;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

namespace {

RolloutRow run_scenario(const PolicyFactory& make_policy, const TrajectoryDataset& ds,
                        const Scenario& sc, const RolloutConfig& cfg) {
    auto policy = make_policy(sc, ds);
    const RolloutResult r = rollout(*policy, ds, sc.human_id, cfg);
    RolloutRow row;
    row.scenario_id = sc.human_id;
    row.spd = spd(r.robot_path, r.human_path);
    row.dtw = dtw(r.robot_path, r.human_path);
    row.proximity = r.min_proximity;
    row.collisions = r.collision_count;
    row.reached = r.reached;
    row.steps = r.steps;
    return row;
}

MetricsReport aggregate(std::vector<RolloutRow> rows) {
    MetricsReport rep;
    rep.rows = std::move(rows);
    if (rep.rows.empty()) return rep;
    const double n = static_cast<double>(rep.rows.size());
    std::size_t prox_count = 0, reached_count = 0;
    double spd_sum = 0.0, dtw_sum = 0.0, prox_sum = 0.0, coll_sum = 0.0;
    for (const auto& row : rep.rows) {
        spd_sum += row.spd;
        dtw_sum += row.dtw;
        if (std::isfinite(row.proximity)) {
            prox_sum += row.proximity;
            ++prox_count;
        }
        coll_sum += static_cast<double>(row.collisions);
        if (row.reached) ++reached_count;
    }
    rep.mean_spd = spd_sum / n;
    rep.mean_dtw = dtw_sum / n;
    // Rollouts that never met another agent have no proximity reading.
    rep.mean_proximity = prox_count > 0 ? prox_sum / static_cast<double>(prox_count) : 0.0;
    rep.mean_collisions = coll_sum / n;
    rep.target_rate = static_cast<double>(reached_count) / n;
    return rep;
}

}  // namespace

MetricsReport evaluate(const PolicyFactory& make_policy, const TrajectoryDataset& ds,
                       std::span<const Scenario> scenarios, const RolloutConfig& cfg) {
    if (scenarios.empty()) throw UserError("evaluate: no scenarios");
    std::vector<RolloutRow> rows(scenarios.size());
    const int threads = worker_threads();
    std::exception_ptr first_error = nullptr;
    // Results land in scenario order, so the report does not depend on the
    // thread count.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        try {
            rows[i] = run_scenario(make_policy, ds, scenarios[i], cfg);
        } catch (...) {
#pragma omp critical(crowdnav_evaluate_error)
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return aggregate(std::move(rows));
}

namespace reference {

MetricsReport evaluate(const PolicyFactory& make_policy, const TrajectoryDataset& ds,
                       std::span<const Scenario> scenarios, const RolloutConfig& cfg) {
    if (scenarios.empty()) throw UserError("evaluate: no scenarios");
    std::vector<RolloutRow> rows(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        rows[i] = run_scenario(make_policy, ds, scenarios[i], cfg);
    return aggregate(std::move(rows));
}

}  // namespace reference

namespace {

void append_row(std::string& out, const RolloutRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%d,%d,%d\n", row.scenario_id, row.spd,
                  row.dtw, row.proximity, row.collisions, row.reached ? 1 : 0, row.steps);
    out += buf;
}

}  // namespace

void save_report_csv(const MetricsReport& report, const std::string& path) {
    std::string text = "scenario_id,spd,dtw,proximity,collisions,reached,steps\n";
    for (const auto& row : report.rows) append_row(text, row);
    char buf[256];
    double mean_steps = 0.0;
    for (const auto& row : report.rows)
        mean_steps += static_cast<double>(row.steps) / static_cast<double>(report.rows.size());
    // Summary row: the reached column carries the target rate.
    std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", report.mean_spd,
                  report.mean_dtw, report.mean_proximity, report.mean_collisions,
                  report.target_rate, mean_steps);
    text += buf;
    std::ofstream out(path);
    if (!out) throw UserError("cannot write report: " + path);
    out << text;
}

void save_report_json(const MetricsReport& report, const std::string& path) {
    json doc;
    doc["rows"] = json::array();
    for (const auto& row : report.rows) {
        doc["rows"].push_back({{"scenario_id", row.scenario_id},
                               {"spd", row.spd},
                               {"dtw", row.dtw},
                               {"proximity", std::isfinite(row.proximity)
                                                 ? json(row.proximity)
                                                 : json(nullptr)},
                               {"collisions", row.collisions},
                               {"reached", row.reached},
                               {"steps", row.steps}});
    }
    doc["summary"] = {{"spd", report.mean_spd},
                      {"dtw", report.mean_dtw},
                      {"proximity", report.mean_proximity},
                      {"collisions", report.mean_collisions},
                      {"target_rate", report.target_rate}};
    std::ofstream out(path);
    if (!out) throw UserError("cannot write report: " + path);
    out << doc.dump(1, '\t') << "\n";
}

}  // namespace crowdnav
