#pragma once

#include <filesystem>
#include <istream>
#include <vector>

namespace htrain {

struct TrackSample {
    double position;  // m
    double value;
};

struct Station {
    double position;  // m
    double dwell;     // s
};

struct TrackProfile {
    double length = 0.0;
    std::vector<TrackSample> gradients;     // rad
    std::vector<TrackSample> speed_limits;  // m/s
    double davis_a = 0.0;                   // N
    double davis_b = 0.0;                   // N s/m
    double davis_c = 0.0;                   // N s^2/m^2
    std::vector<Station> stations;

    void validate() const;
};

struct JourneySpec {
    double target_time = 0.0;  // s
    double z0 = 0.01;          // m^2/s^2
    double zeta0 = 0.6;
    double temperature0 = 293.0;  // K
    double z_stop = 0.01;         // m^2/s^2
    double v_min = 2.0;           // m/s
    // Temperature floor is min(T0, T_amb) minus this margin, clamped at 0.
    double temperature_margin = 10.0;  // K

    void validate() const;
};

struct Interval {
    double start = 0.0;  // m along the grid (stop intervals carry the station position)
    double width = 0.0;  // m
    double gradient = 0.0;
    double speed_limit = 0.0;
    bool is_stop = false;
    double dwell = 0.0;
};

struct SpatialGrid {
    std::vector<Interval> intervals;

    int size() const { return static_cast<int>(intervals.size()); }
    const Interval& operator[](int i) const { return intervals[static_cast<std::size_t>(i)]; }
    bool ends_at_station() const { return !intervals.empty() && intervals.back().is_stop; }
};

// Zero-order hold: the last sample at or before `position` (first sample before it).
double sample_hold(const std::vector<TrackSample>& samples, double position);

TrackProfile parse_track(std::istream& in);
TrackProfile load_track(const std::filesystem::path& path);

SpatialGrid build_grid(const TrackProfile& track, double base_step, const JourneySpec& spec);

double gradient_at(const SpatialGrid& grid, int i);

}  // namespace htrain
