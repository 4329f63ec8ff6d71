#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crowdnav/geometry.hpp"

namespace crowdnav {

struct AgentSample {
    double t = 0.0;  // seconds
    Vec2 pos;        // meters
};

// One pedestrian's recorded path. Sample times strictly increase.
struct AgentTrack {
    int id = 0;
    std::vector<AgentSample> samples;

    double start_time() const { return samples.front().t; }
    double end_time() const { return samples.back().t; }

    // Linear interpolation inside the recorded span; no extrapolation.
    // Returns false when t is outside [start_time, end_time].
    bool position_at(double t, Vec2* out) const;
};

// Static environment geometry as exact line segments.
struct ObstacleMap {
    std::vector<Segment> segments;
    Rect bounds;
};

struct TrajectoryDataset {
    std::vector<AgentTrack> agents;
    ObstacleMap map;
    double dt = 0.4;  // seconds per step after resampling

    const AgentTrack* find_agent(int id) const;
};

// Ground-truth action at one step: scalar speed plus heading in [0, 360).
struct StepLabel {
    double speed = 0.0;
    double heading_deg = 0.0;
};

// --- obsmat ingestion ------------------------------------------------------

// Parses the ETH BIWI annotation format: 8 whitespace-separated numeric
// columns per row (frame, id, px, pz, py, vx, vz, vy). Ground-plane
// position is (px, py); annotated velocities are ignored and later
// recomputed from positions. frame / frame_rate gives seconds
// (seq_eth: 15 fps video, seq_hotel: 25 fps).
//
// Rows with non-finite values are skipped with a warning on stderr; a row
// with the wrong column count or a non-numeric field is an error naming
// the line. Tracks left with fewer than 2 samples are dropped with a
// warning. An empty file is an error ("no rows").
TrajectoryDataset import_obsmat(const std::string& path, double frame_rate = 15.0);

// --- resampling and labels -------------------------------------------------

// Samples at t0, t0+dt, ... up to the last original time, positions
// linearly interpolated. Never extrapolates beyond the original span.
AgentTrack resample_track(const AgentTrack& track, double dt);

// Applies resample_track to every agent and drops tracks left with fewer
// than 2 samples (with a warning).
TrajectoryDataset resample_dataset(const TrajectoryDataset& ds, double dt);

// Label i is derived from the displacement (p[i+1] - p[i]) / dt. The
// heading of a zero displacement inherits the previous step's heading
// (first step defaults to 0). Requires at least 2 samples.
std::vector<StepLabel> velocity_labels(const AgentTrack& track, double dt);

// --- split and augmentation ------------------------------------------------

// Deterministic shuffle by seed, first ceil(fraction * n) tracks to train.
// Both halves share the same map.
std::pair<TrajectoryDataset, TrajectoryDataset>
split_train_test(const TrajectoryDataset& ds, double train_fraction, std::uint64_t seed);

// Returns the original dataset followed by `copies` replicas, each being
// the whole world (map segments and every trajectory) rigidly rotated by
// one random whole-degree angle about the map-bounds center. Replicas are
// separate datasets: a single ObstacleMap cannot hold differently rotated
// walls without creating phantom obstacles.
std::vector<TrajectoryDataset>
augment_rotate(const TrajectoryDataset& ds, int copies, std::uint64_t seed);

// --- persistence -----------------------------------------------------------

// Native dataset document:
// {dt, map:{segments:[[x1,y1,x2,y2],...]}, agents:[{id, samples:[[t,x,y],...]},...]}
void save_dataset_json(const TrajectoryDataset& ds, const std::string& path);
TrajectoryDataset load_dataset_json(const std::string& path);

// Map file: {"segments": [[x1,y1,x2,y2], ...]}
ObstacleMap load_map_json(const std::string& path);

// Bounding box of map segments and all agent positions, padded a little.
// Bounds are derived state and are recomputed, never serialized.
void recompute_bounds(TrajectoryDataset& ds);

}  // namespace crowdnav
