#include "crowdnav/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "crowdnav/errors.hpp"

namespace crowdnav {

using nlohmann::json;

namespace {

SceneSnapshot live_scene(const TrajectoryDataset& ds, double t, int excluded_id,
                         double agent_radius) {
    SceneSnapshot scene;
    scene.map = &ds.map;
    scene.agent_radius = agent_radius;
    scene.excluded_id = excluded_id;
    for (const auto& agent : ds.agents) {
        if (agent.id == excluded_id) continue;
        Vec2 p;
        // Agents replay their recorded span and vanish outside it.
        if (agent.position_at(t, &p)) scene.agents.push_back({agent.id, p});
    }
    return scene;
}

}  // namespace

RolloutResult rollout(Policy& policy, const TrajectoryDataset& ds, int human_id,
                      const RolloutConfig& cfg) {
    const AgentTrack* human = ds.find_agent(human_id);
    if (!human) throw UserError("unknown human id: " + std::to_string(human_id));
    if (human->samples.size() < 2)
        throw UserError("human id " + std::to_string(human_id) + " has fewer than 2 samples");

    RolloutResult result;
    result.human_id = human_id;
    result.dt = ds.dt;
    for (const auto& s : human->samples) result.human_path.push_back(s.pos);

    const Vec2 target = human->samples.back().pos;
    const double t0 = human->start_time();
    Vec2 pos = human->samples.front().pos;
    Vec2 vel{0.0, 0.0};
    result.robot_path.push_back(pos);
    result.min_proximity = std::numeric_limits<double>::infinity();

    policy.reset();
    LidarScan scan_prev;
    bool have_prev = false;
    std::set<int> in_collision;  // agents currently inside the collision distance

    auto update_safety = [&](const SceneSnapshot& scene) {
        for (const auto& agent : scene.agents) {
            const double d = distance(pos, agent.pos);
            result.min_proximity =
                std::min(result.min_proximity, std::max(0.0, d - cfg.collision_distance));
            if (d < cfg.collision_distance) {
                if (in_collision.insert(agent.id).second) ++result.collision_count;
            } else {
                in_collision.erase(agent.id);
            }
        }
    };

    result.reached = distance(pos, target) <= cfg.target_radius;
    for (int step = 0; step < cfg.max_steps && !result.reached; ++step) {
        const double t = t0 + step * ds.dt;
        const SceneSnapshot scene = live_scene(ds, t, human_id, cfg.agent_radius);
        update_safety(scene);

        const LidarScan scan_cur = simulate_scan(scene, pos, cfg.lidar_max_range);
        if (!have_prev) {
            scan_prev = scan_cur;
            have_prev = true;
        }

        Observation obs;
        obs.scan_prev = &scan_prev;
        obs.scan_cur = &scan_cur;
        obs.target = encode_target(pos, target);
        obs.robot_pos = pos;
        obs.robot_vel = vel;
        obs.target_pos = target;
        obs.scene = &scene;
        obs.dt = ds.dt;
        auto [heading, speed] = policy.step(obs);
        speed = std::clamp(speed, 0.0, cfg.max_speed);

        vel = dir_from_deg(heading) * speed;
        pos += vel * ds.dt;
        result.robot_path.push_back(pos);
        result.steps = step + 1;
        scan_prev = scan_cur;

        if (distance(pos, target) <= cfg.target_radius) result.reached = true;
    }

    // Safety state at the final position, against the scene of the final time.
    const SceneSnapshot final_scene =
        live_scene(ds, t0 + result.steps * ds.dt, human_id, cfg.agent_radius);
    update_safety(final_scene);
    return result;
}

std::vector<Scenario> make_scenarios(const TrajectoryDataset& ds) {
    std::vector<Scenario> out;
    for (const auto& agent : ds.agents) {
        if (agent.samples.size() < 2) continue;
        out.push_back({agent.id, agent.samples.front().pos, agent.samples.back().pos});
    }
    return out;
}

std::vector<Scenario> make_scenarios(const TrajectoryDataset& ds, SplitHalf half,
                                     double train_fraction, std::uint64_t seed) {
    auto [train, test] = split_train_test(ds, train_fraction, seed);
    return make_scenarios(half == SplitHalf::kTrain ? train : test);
}

void save_trace_json(const RolloutResult& result, const std::string& path) {
    json doc;
    doc["human_id"] = result.human_id;
    doc["dt"] = result.dt;
    auto path_json = [](const std::vector<Vec2>& p) {
        json arr = json::array();
        for (const auto& v : p) arr.push_back({v.x, v.y});
        return arr;
    };
    doc["robot_path"] = path_json(result.robot_path);
    doc["human_path"] = path_json(result.human_path);
    doc["reached"] = result.reached;
    doc["steps"] = result.steps;
    if (std::isfinite(result.min_proximity))
        doc["min_proximity"] = result.min_proximity;
    else
        doc["min_proximity"] = nullptr;  // no other agent was ever live
    doc["collision_count"] = result.collision_count;
    std::ofstream out(path);
    if (!out) throw UserError("cannot write trace: " + path);
    out << doc.dump(1, '\t') << "\n";
}

void save_trace_svg(const RolloutResult& result, const ObstacleMap& map, const std::string& path) {
    Rect box = map.bounds;
    for (const auto& p : result.robot_path) box.expand(p);
    for (const auto& p : result.human_path) box.expand(p);
    box.pad(1.0);

    std::ofstream out(path);
    if (!out) throw UserError("cannot write svg: " + path);
    char buf[512];
    const double w = box.hi.x - box.lo.x;
    const double h = box.hi.y - box.lo.y;
    // Flip y so the world's +y points up on screen.
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.3f %.3f %.3f %.3f\">\n"
                  "<g transform=\"translate(0,%.3f) scale(1,-1)\">\n",
                  box.lo.x, box.lo.y, w, h, box.hi.y + box.lo.y);
    out << buf;
    for (const auto& s : map.segments) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" "
                      "stroke=\"#444\" stroke-width=\"0.08\"/>\n",
                      s.a.x, s.a.y, s.b.x, s.b.y);
        out << buf;
    }
    auto polyline = [&](const std::vector<Vec2>& pts, const char* color) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"0.06\" points=\"";
        for (const auto& p : pts) {
            std::snprintf(buf, sizeof(buf), "%.3f,%.3f ", p.x, p.y);
            out << buf;
        }
        out << "\"/>\n";
    };
    polyline(result.robot_path, "#1f77b4");  // robot
    polyline(result.human_path, "#999999");  // human
    const Vec2 start = result.human_path.front();
    const Vec2 goal = result.human_path.back();
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"0.15\" fill=\"green\"/>\n"
                  "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"0.15\" fill=\"red\"/>\n",
                  start.x, start.y, goal.x, goal.y);
    out << buf;
    out << "</g>\n</svg>\n";
}

}  // namespace crowdnav
