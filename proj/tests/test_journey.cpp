#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "htrain/errors.hpp"
#include "htrain/journey.hpp"
#include "support.hpp"

using namespace htrain;

namespace {

TrackProfile parse(const std::string& text) {
    std::istringstream in(text);
    return parse_track(in);
}

const char* kBasic = R"(length_m,1000
davis_a,2000
davis_b,30
davis_c,8
#gradients pos_m,theta_rad
0,0
500,0.01
1000,0.0
#limits pos_m,vmax_mps
0,25
#stations pos_m,dwell_s
)";

TrackProfile bare_track(double length) {
    TrackProfile track;
    track.length = length;
    track.speed_limits = {{0.0, 25.0}};
    return track;
}

int running_count(const SpatialGrid& grid) {
    int count = 0;
    for (const auto& interval : grid.intervals) count += interval.is_stop ? 0 : 1;
    return count;
}

}  // namespace

TEST(LoadTrack, ThreeGradientSamplesEchoed) {
    const auto track = parse(kBasic);
    ASSERT_EQ(track.gradients.size(), 3u);
    EXPECT_DOUBLE_EQ(track.gradients[1].position, 500.0);
    EXPECT_DOUBLE_EQ(track.gradients[1].value, 0.01);
    EXPECT_DOUBLE_EQ(track.length, 1000.0);
    EXPECT_DOUBLE_EQ(track.davis_c, 8.0);
}

TEST(LoadTrack, DecreasingPositionsRejected) {
    const std::string text = "length_m,1000\n#limits pos_m,vmax_mps\n0,25\n#gradients pos_m,theta_rad\n600,0\n400,0\n";
    try {
        parse(text);
        FAIL() << "expected an error";
    } catch (const InputError& err) {
        EXPECT_NE(std::string(err.what()).find("non-monotone position"), std::string::npos);
    }
}

TEST(LoadTrack, EmptyStationsStillValid) {
    const auto track = parse(kBasic);
    EXPECT_TRUE(track.stations.empty());
}

TEST(LoadTrack, UnknownKeyAndBadNumberCarryLineContext) {
    try {
        parse("length_m,1000\nfriction,3\n");
        FAIL();
    } catch (const InputError& err) {
        EXPECT_NE(std::string(err.what()).find("line 2"), std::string::npos);
    }
    try {
        parse("length_m,1000\n#limits pos_m,vmax_mps\n0,fast\n");
        FAIL();
    } catch (const InputError& err) {
        EXPECT_NE(std::string(err.what()).find("line 3"), std::string::npos);
    }
}

TEST(LoadTrack, MissingFileNamesPath) {
    try {
        load_track("/nonexistent/route.track");
        FAIL();
    } catch (const InputError& err) {
        EXPECT_NE(std::string(err.what()).find("/nonexistent/route.track"), std::string::npos);
    }
}

TEST(BuildGrid, ExactDivisionWithoutStations) {
    const auto grid = build_grid(bare_track(1000.0), 100.0, test::journey(100.0));
    ASSERT_EQ(grid.size(), 10);
    for (const auto& interval : grid.intervals) EXPECT_DOUBLE_EQ(interval.width, 100.0);
}

TEST(BuildGrid, StopWidthIsDwellTimesStopSpeed) {
    auto track = bare_track(1000.0);
    track.stations = {{0.0, 60.0}, {1000.0, 60.0}};
    const auto grid = build_grid(track, 100.0, test::journey(200.0));
    ASSERT_TRUE(grid[0].is_stop);
    EXPECT_NEAR(grid[0].width, 6.0, 1e-12);
    EXPECT_DOUBLE_EQ(grid[0].dwell, 60.0);
    EXPECT_TRUE(grid.ends_at_station());
}

TEST(BuildGrid, LastIntervalTruncated) {
    const auto grid = build_grid(bare_track(250.0), 100.0, test::journey(100.0));
    ASSERT_EQ(grid.size(), 3);
    EXPECT_DOUBLE_EQ(grid[0].width, 100.0);
    EXPECT_DOUBLE_EQ(grid[1].width, 100.0);
    EXPECT_DOUBLE_EQ(grid[2].width, 50.0);
}

TEST(BuildGrid, Errors) {
    EXPECT_THROW(build_grid(bare_track(100.0), 200.0, test::journey(100.0)), InputError);
    auto track = bare_track(1000.0);
    track.stations = {{1200.0, 30.0}};
    EXPECT_THROW(build_grid(track, 100.0, test::journey(100.0)), InputError);
}

TEST(GradientAt, FlatConstantAndStep) {
    const auto flat = build_grid(bare_track(1000.0), 100.0, test::journey(100.0));
    for (int i = 0; i < flat.size(); ++i) EXPECT_EQ(gradient_at(flat, i), 0.0);

    auto constant = bare_track(1000.0);
    constant.gradients = {{0.0, 0.01}};
    const auto grid_c = build_grid(constant, 100.0, test::journey(100.0));
    for (int i = 0; i < grid_c.size(); ++i) EXPECT_DOUBLE_EQ(gradient_at(grid_c, i), 0.01);

    auto step = bare_track(1000.0);
    step.gradients = {{0.0, 0.0}, {500.0, 0.02}};
    const auto grid_s = build_grid(step, 200.0, test::journey(100.0));
    // Interval 2 spans 400-600 m; its midpoint 500 m sits on the second sample.
    EXPECT_DOUBLE_EQ(gradient_at(grid_s, 2), 0.02);
    EXPECT_DOUBLE_EQ(gradient_at(grid_s, 3), 0.02);  // midpoint 700 m
    EXPECT_DOUBLE_EQ(gradient_at(grid_s, 1), 0.0);   // midpoint 300 m
    EXPECT_THROW(gradient_at(grid_s, grid_s.size()), std::out_of_range);

    const auto grid_mid = build_grid(step, 400.0, test::journey(100.0));
    EXPECT_DOUBLE_EQ(gradient_at(grid_mid, 1), 0.02);  // midpoint 600 m
}

TEST(GridProperties, WidthsSumAndStopsExactAndDeterministic) {
    for (double step : {37.0, 50.0, 120.0, 333.0}) {
        auto track = test::station_route(2345.0, 20.0, 45.0);
        track.stations.insert(track.stations.begin() + 1, Station{1000.0, 20.0});
        JourneySpec spec = test::journey(500.0);
        const auto grid = build_grid(track, step, spec);
        double running = 0.0;
        for (const auto& interval : grid.intervals) {
            if (interval.is_stop) {
                EXPECT_EQ(interval.width, interval.dwell * std::sqrt(spec.z_stop));
            } else {
                running += interval.width;
                EXPECT_GT(interval.width, 0.0);
                EXPECT_LE(interval.width, step + 1e-9);
            }
        }
        EXPECT_NEAR(running, track.length, 1e-9 * track.length);
        EXPECT_EQ(running_count(grid) + 3, grid.size());

        const auto again = build_grid(track, step, spec);
        ASSERT_EQ(again.size(), grid.size());
        for (int i = 0; i < grid.size(); ++i) {
            EXPECT_EQ(again[i].start, grid[i].start);
            EXPECT_EQ(again[i].width, grid[i].width);
            EXPECT_EQ(again[i].gradient, grid[i].gradient);
            EXPECT_EQ(again[i].speed_limit, grid[i].speed_limit);
        }
    }
}

TEST(JourneySpec, Validation) {
    JourneySpec spec = test::journey(100.0);
    EXPECT_NO_THROW(spec.validate());
    spec.z_stop = 9.0;  // above v_min^2
    EXPECT_THROW(spec.validate(), InputError);
    spec = test::journey(0.0);
    EXPECT_THROW(spec.validate(), InputError);
}
