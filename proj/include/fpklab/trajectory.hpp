#pragma once

#include <map>
#include <string>
#include <vector>

#include "fpklab/errors.hpp"
#include "fpklab/grid.hpp"

namespace fpklab {

/// Time-indexed solution record: density snapshots at a uniform stride plus
/// scalar channels (mass, Lyapunov moment, low moments) recorded every step.
struct Trajectory {
    GridSpec grid;
    double dt = 0.0;
    double snapshot_stride = 0.0;

    std::vector<double> snap_times;
    std::vector<DensityField> snapshots;

    std::vector<double> step_times;
    std::map<std::string, std::vector<double>> channels;

    std::vector<std::string> warnings;

    const DensityField& initial() const {
        if (snapshots.empty()) throw EmptyTrajectoryError("trajectory has no snapshots");
        return snapshots.front();
    }
    const DensityField& terminal() const {
        if (snapshots.empty()) throw EmptyTrajectoryError("trajectory has no snapshots");
        return snapshots.back();
    }
    double horizon() const { return snap_times.empty() ? 0.0 : snap_times.back(); }

    const std::vector<double>& channel(const std::string& name) const {
        auto it = channels.find(name);
        if (it == channels.end()) throw Error("trajectory: no channel '" + name + "'");
        return it->second;
    }
};

}  // namespace fpklab
