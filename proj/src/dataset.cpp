#include "crowdnav/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crowdnav/errors.hpp"
#include "crowdnav/rng.hpp"

namespace crowdnav {

using nlohmann::json;

bool AgentTrack::position_at(double t, Vec2* out) const {
    if (samples.empty() || t < samples.front().t || t > samples.back().t) return false;
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const AgentSample& s, double v) { return s.t < v; });
    if (it == samples.begin()) {
        *out = it->pos;
        return true;
    }
    const AgentSample& hi = *it;
    const AgentSample& lo = *(it - 1);
    if (hi.t == lo.t) {
        *out = hi.pos;
        return true;
    }
    const double a = (t - lo.t) / (hi.t - lo.t);
    *out = lo.pos + (hi.pos - lo.pos) * a;
    return true;
}

const AgentTrack* TrajectoryDataset::find_agent(int id) const {
    for (const auto& a : agents)
        if (a.id == id) return &a;
    return nullptr;
}

TrajectoryDataset import_obsmat(const std::string& path, double frame_rate) {
    std::ifstream in(path);
    if (!in) throw UserError("obsmat file not found: " + path);
    if (frame_rate <= 0.0) throw UserError("frame rate must be positive");

    std::map<int, std::vector<AgentSample>> by_id;
    std::string line;
    int line_no = 0;
    int rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<double> cols;
        std::string tok;
        while (ls >> tok) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size()) {
                // from_chars rejects e.g. "1.2e+03" only on broken builds;
                // fall back to strtod for full float syntax.
                char* end = nullptr;
                v = std::strtod(tok.c_str(), &end);
                if (end != tok.c_str() + tok.size())
                    throw UserError("obsmat line " + std::to_string(line_no) +
                                    ": non-numeric field '" + tok + "'");
            }
            cols.push_back(v);
        }
        if (cols.empty()) continue;  // blank line
        if (cols.size() != 8)
            throw UserError("obsmat line " + std::to_string(line_no) + ": expected 8 columns, got " +
                            std::to_string(cols.size()));
        ++rows;
        const double frame = cols[0], id = cols[1], px = cols[2], py = cols[4];
        if (!std::isfinite(frame) || !std::isfinite(id) || !std::isfinite(px) ||
            !std::isfinite(py)) {
            std::cerr << "warning: obsmat line " << line_no << ": non-finite values, row skipped\n";
            continue;
        }
        by_id[static_cast<int>(std::llround(id))].push_back({frame / frame_rate, Vec2{px, py}});
    }
    if (rows == 0) throw UserError("obsmat file has no rows: " + path);

    TrajectoryDataset ds;
    std::vector<double> spacings;
    for (auto& [id, samples] : by_id) {
        std::sort(samples.begin(), samples.end(),
                  [](const AgentSample& a, const AgentSample& b) { return a.t < b.t; });
        std::vector<AgentSample> dedup;
        for (const auto& s : samples) {
            if (!dedup.empty() && s.t == dedup.back().t) {
                std::cerr << "warning: agent " << id << ": duplicate timestamp " << s.t
                          << ", sample skipped\n";
                continue;
            }
            dedup.push_back(s);
        }
        if (dedup.size() < 2) {
            std::cerr << "warning: agent " << id << ": fewer than 2 samples, track dropped\n";
            continue;
        }
        for (std::size_t i = 1; i < dedup.size(); ++i) spacings.push_back(dedup[i].t - dedup[i - 1].t);
        ds.agents.push_back({id, std::move(dedup)});
    }
    if (!spacings.empty()) {
        std::nth_element(spacings.begin(), spacings.begin() + spacings.size() / 2, spacings.end());
        ds.dt = spacings[spacings.size() / 2];  // raw estimate; resampling sets the final dt
    }
    recompute_bounds(ds);
    return ds;
}

AgentTrack resample_track(const AgentTrack& track, double dt) {
    if (dt <= 0.0) throw UserError("dt must be positive");
    if (track.samples.size() < 2)
        throw UserError("track " + std::to_string(track.id) + " has fewer than 2 samples");

    AgentTrack out;
    out.id = track.id;
    const double t0 = track.start_time();
    const double t_end = track.end_time();
    const int steps = static_cast<int>(std::floor((t_end - t0) / dt + 1e-9));
    out.samples.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        const double t = t0 + k * dt;
        Vec2 p;
        track.position_at(std::min(t, t_end), &p);
        out.samples.push_back({t, p});
    }
    return out;
}

TrajectoryDataset resample_dataset(const TrajectoryDataset& ds, double dt) {
    TrajectoryDataset out;
    out.map = ds.map;
    out.dt = dt;
    for (const auto& track : ds.agents) {
        AgentTrack r = resample_track(track, dt);
        if (r.samples.size() < 2) {
            std::cerr << "warning: agent " << track.id
                      << ": span shorter than dt after resampling, track dropped\n";
            continue;
        }
        out.agents.push_back(std::move(r));
    }
    return out;
}

std::vector<StepLabel> velocity_labels(const AgentTrack& track, double dt) {
    if (track.samples.size() < 2)
        throw UserError("track " + std::to_string(track.id) + " has fewer than 2 samples");
    std::vector<StepLabel> labels;
    labels.reserve(track.samples.size() - 1);
    double prev_heading = 0.0;
    for (std::size_t i = 0; i + 1 < track.samples.size(); ++i) {
        const Vec2 d = track.samples[i + 1].pos - track.samples[i].pos;
        StepLabel lab;
        lab.speed = d.norm() / dt;
        lab.heading_deg = (d.x == 0.0 && d.y == 0.0) ? prev_heading : heading_deg(d);
        prev_heading = lab.heading_deg;
        labels.push_back(lab);
    }
    return labels;
}

std::pair<TrajectoryDataset, TrajectoryDataset>
split_train_test(const TrajectoryDataset& ds, double train_fraction, std::uint64_t seed) {
    if (ds.agents.empty()) throw UserError("cannot split an empty dataset");
    if (train_fraction <= 0.0 || train_fraction > 1.0)
        throw UserError("train fraction must be in (0, 1]");

    std::vector<std::size_t> order(ds.agents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(order.size()) - 1e-12));

    TrajectoryDataset train, test;
    train.map = test.map = ds.map;
    train.dt = test.dt = ds.dt;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : test).agents.push_back(ds.agents[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

namespace {

TrajectoryDataset rotate_dataset(const TrajectoryDataset& ds, double angle_deg) {
    const Vec2 c = ds.map.bounds.center();
    TrajectoryDataset out;
    out.dt = ds.dt;
    out.map.segments.reserve(ds.map.segments.size());
    for (const auto& s : ds.map.segments)
        out.map.segments.push_back({rotate_about(s.a, c, angle_deg), rotate_about(s.b, c, angle_deg)});
    out.agents.reserve(ds.agents.size());
    for (const auto& a : ds.agents) {
        AgentTrack t;
        t.id = a.id;
        t.samples.reserve(a.samples.size());
        for (const auto& s : a.samples) t.samples.push_back({s.t, rotate_about(s.pos, c, angle_deg)});
        out.agents.push_back(std::move(t));
    }
    recompute_bounds(out);
    return out;
}

}  // namespace

std::vector<TrajectoryDataset>
augment_rotate(const TrajectoryDataset& ds, int copies, std::uint64_t seed) {
    if (copies < 0) throw UserError("augmentation copies must be >= 0");
    std::vector<TrajectoryDataset> out;
    out.reserve(static_cast<std::size_t>(copies) + 1);
    out.push_back(ds);
    Rng rng(seed);
    for (int i = 0; i < copies; ++i) {
        // Whole-degree angles keep replica scans exactly a circular shift
        // of the originals, which the tests exploit.
        const double angle = static_cast<double>(rng.uniform_int(1, 359));
        out.push_back(rotate_dataset(ds, angle));
    }
    return out;
}

void recompute_bounds(TrajectoryDataset& ds) {
    Rect r;
    for (const auto& s : ds.map.segments) {
        r.expand(s.a);
        r.expand(s.b);
    }
    for (const auto& a : ds.agents)
        for (const auto& s : a.samples) r.expand(s.pos);
    if (!r.valid()) r = Rect{{0.0, 0.0}, {0.0, 0.0}};
    r.pad(0.5);
    ds.map.bounds = r;
}

void save_dataset_json(const TrajectoryDataset& ds, const std::string& path) {
    json doc;
    doc["dt"] = ds.dt;
    doc["map"]["segments"] = json::array();
    for (const auto& s : ds.map.segments)
        doc["map"]["segments"].push_back({s.a.x, s.a.y, s.b.x, s.b.y});
    doc["agents"] = json::array();
    for (const auto& a : ds.agents) {
        json ja;
        ja["id"] = a.id;
        ja["samples"] = json::array();
        for (const auto& s : a.samples) ja["samples"].push_back({s.t, s.pos.x, s.pos.y});
        doc["agents"].push_back(std::move(ja));
    }
    std::ofstream out(path);
    if (!out) throw UserError("cannot write dataset file: " + path);
    out << doc.dump(1, '\t') << "\n";
}

TrajectoryDataset load_dataset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("dataset file not found: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw UserError("dataset file " + path + ": " + e.what());
    }
    TrajectoryDataset ds;
    try {
        ds.dt = doc.at("dt").get<double>();
        for (const auto& s : doc.at("map").at("segments"))
            ds.map.segments.push_back(
                {{s.at(0).get<double>(), s.at(1).get<double>()},
                 {s.at(2).get<double>(), s.at(3).get<double>()}});
        for (const auto& ja : doc.at("agents")) {
            AgentTrack t;
            t.id = ja.at("id").get<int>();
            for (const auto& s : ja.at("samples"))
                t.samples.push_back(
                    {s.at(0).get<double>(), {s.at(1).get<double>(), s.at(2).get<double>()}});
            ds.agents.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw UserError("dataset file " + path + ": " + e.what());
    }
    if (ds.dt <= 0.0) throw UserError("dataset file " + path + ": dt must be positive");
    for (const auto& s : ds.map.segments)
        if (s.length() == 0.0) throw UserError("dataset file " + path + ": zero-length segment");
    std::set<int> ids;
    for (const auto& a : ds.agents) {
        if (!ids.insert(a.id).second)
            throw UserError("dataset file " + path + ": duplicate agent id " + std::to_string(a.id));
        for (std::size_t i = 1; i < a.samples.size(); ++i)
            if (a.samples[i].t <= a.samples[i - 1].t)
                throw UserError("dataset file " + path + ": agent " + std::to_string(a.id) +
                                " sample times must strictly increase");
    }
    recompute_bounds(ds);
    return ds;
}

ObstacleMap load_map_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("map not found: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw UserError("map file " + path + ": " + e.what());
    }
    ObstacleMap map;
    try {
        for (const auto& s : doc.at("segments")) {
            Segment seg{{s.at(0).get<double>(), s.at(1).get<double>()},
                        {s.at(2).get<double>(), s.at(3).get<double>()}};
            if (seg.length() == 0.0) throw UserError("map file " + path + ": zero-length segment");
            map.segments.push_back(seg);
            map.bounds.expand(seg.a);
            map.bounds.expand(seg.b);
        }
    } catch (const json::exception& e) {
        throw UserError("map file " + path + ": " + e.what());
    }
    return map;
}

}  // namespace crowdnav
