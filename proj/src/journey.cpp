#include "htrain/journey.hpp"

#include "htrain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace htrain {

namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream stream(line);
    std::string field;
    while (std::getline(stream, field, ',')) fields.push_back(trim(field));
    return fields;
}

double parse_number(const std::string& field, int line_no, const std::string& what) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != field.size() || !std::isfinite(value)) {
        throw InputError("line " + std::to_string(line_no) + ": field '" + what +
                         "' is not a finite number: '" + field + "'");
    }
    return value;
}

void check_positions(const std::vector<TrackSample>& samples, double length, const char* name) {
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double pos = samples[k].position;
        if (pos < 0.0 || pos > length) {
            throw InputError(std::string(name) + " sample " + std::to_string(k) +
                             ": position outside [0, length]");
        }
        if (k > 0 && !(pos > samples[k - 1].position)) {
            throw InputError(std::string(name) + " sample " + std::to_string(k) +
                             ": non-monotone position");
        }
    }
}

enum class Section { header, gradients, limits, stations };

}  // namespace

void TrackProfile::validate() const {
    if (!(length > 0.0)) throw InputError("track length must be positive");
    check_positions(gradients, length, "gradients");
    check_positions(speed_limits, length, "limits");
    if (speed_limits.empty()) throw InputError("limits: at least one speed limit sample required");
    for (const auto& sample : speed_limits) {
        if (!(sample.value > 0.0)) throw InputError("limits: speed limits must be positive");
    }
    if (davis_a < 0.0 || davis_c < 0.0) throw InputError("davis_a and davis_c must be non-negative");
    for (std::size_t k = 0; k < stations.size(); ++k) {
        const auto& station = stations[k];
        if (station.position < 0.0 || station.position > length) {
            throw InputError("stations sample " + std::to_string(k) + ": station beyond track end");
        }
        if (k > 0 && !(station.position > stations[k - 1].position)) {
            throw InputError("stations sample " + std::to_string(k) + ": non-monotone position");
        }
        if (station.dwell < 0.0) throw InputError("stations: dwell must be non-negative");
    }
}

void JourneySpec::validate() const {
    if (!(target_time > 0.0)) throw InputError("journey: target_time must be positive");
    if (!(zeta0 > 0.0 && zeta0 < 1.0)) throw InputError("journey: zeta0 must lie in (0, 1)");
    if (temperature0 < 0.0) throw InputError("journey: T0 must be non-negative");
    if (!(v_min > 0.0)) throw InputError("journey: v_min must be positive");
    if (!(z_stop > 0.0 && z_stop <= v_min * v_min)) {
        throw InputError("journey: z_stop must satisfy 0 < z_stop <= v_min^2");
    }
    if (z0 < 0.0) throw InputError("journey: z0 must be non-negative");
    if (temperature_margin < 0.0) throw InputError("journey: temperature_margin must be non-negative");
}

double sample_hold(const std::vector<TrackSample>& samples, double position) {
    if (samples.empty()) return 0.0;
    auto after = std::upper_bound(samples.begin(), samples.end(), position,
                                  [](double pos, const TrackSample& s) { return pos < s.position; });
    if (after == samples.begin()) return samples.front().value;
    return std::prev(after)->value;
}

TrackProfile parse_track(std::istream& in) {
    static const std::map<std::string, Section> headers = {
        {"#gradients pos_m,theta_rad", Section::gradients},
        {"#limits pos_m,vmax_mps", Section::limits},
        {"#stations pos_m,dwell_s", Section::stations},
    };
    TrackProfile track;
    bool have_length = false;
    Section section = Section::header;
    std::map<std::string, bool> seen_keys;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line.front() == ';') continue;
        if (line.front() == '#') {
            std::string header;
            for (char ch : line) {
                if (ch != ' ' || (!header.empty() && header.back() != ' ')) header.push_back(ch);
            }
            auto found = headers.find(header);
            if (found == headers.end()) {
                throw InputError("line " + std::to_string(line_no) + ": unknown section header '" + line + "'");
            }
            section = found->second;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 2) {
            throw InputError("line " + std::to_string(line_no) + ": expected 2 comma-separated fields");
        }
        if (section == Section::header) {
            const std::string& key = fields[0];
            if (seen_keys[key]) throw InputError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            seen_keys[key] = true;
            const double value = parse_number(fields[1], line_no, key);
            if (key == "length_m") {
                track.length = value;
                have_length = true;
            } else if (key == "davis_a") {
                track.davis_a = value;
            } else if (key == "davis_b") {
                track.davis_b = value;
            } else if (key == "davis_c") {
                track.davis_c = value;
            } else {
                throw InputError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            }
            continue;
        }
        const double pos = parse_number(fields[0], line_no, "pos_m");
        switch (section) {
            case Section::gradients:
                track.gradients.push_back({pos, parse_number(fields[1], line_no, "theta_rad")});
                break;
            case Section::limits:
                track.speed_limits.push_back({pos, parse_number(fields[1], line_no, "vmax_mps")});
                break;
            case Section::stations:
                track.stations.push_back({pos, parse_number(fields[1], line_no, "dwell_s")});
                break;
            case Section::header:
                break;
        }
    }
    if (!have_length) throw InputError("track file: missing key 'length_m'");
    track.validate();
    return track;
}

TrackProfile load_track(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open track file: " + path.string());
    try {
        return parse_track(in);
    } catch (const InputError& err) {
        throw InputError(path.string() + ": " + err.what());
    }
}

SpatialGrid build_grid(const TrackProfile& track, double base_step, const JourneySpec& spec) {
    track.validate();
    spec.validate();
    if (!(base_step > 0.0)) throw InputError("base_step must be positive");
    if (base_step > track.length) throw InputError("base_step larger than track length");

    const double stop_speed = std::sqrt(spec.z_stop);
    SpatialGrid grid;
    auto add_running = [&](double from, double to) {
        const double span = to - from;
        if (span <= 0.0) return;
        const auto count = static_cast<long>(std::ceil(span / base_step - 1e-9));
        for (long k = 0; k < count; ++k) {
            const double start = from + static_cast<double>(k) * base_step;
            const double end = (k + 1 == count) ? to : start + base_step;
            const double mid = 0.5 * (start + end);
            Interval interval;
            interval.start = start;
            interval.width = end - start;
            interval.gradient = sample_hold(track.gradients, mid);
            interval.speed_limit = sample_hold(track.speed_limits, mid);
            grid.intervals.push_back(interval);
        }
    };
    auto add_stop = [&](const Station& station) {
        Interval interval;
        interval.start = station.position;
        interval.width = station.dwell * stop_speed;
        interval.gradient = 0.0;
        interval.speed_limit = stop_speed;
        interval.is_stop = true;
        interval.dwell = station.dwell;
        if (!(interval.width > 0.0)) throw InputError("station dwell must be positive to form a stop interval");
        grid.intervals.push_back(interval);
    };

    double cursor = 0.0;
    for (const auto& station : track.stations) {
        if (station.position > track.length) throw InputError("station beyond track end");
        add_running(cursor, station.position);
        add_stop(station);
        cursor = station.position;
    }
    add_running(cursor, track.length);
    return grid;
}

double gradient_at(const SpatialGrid& grid, int i) {
    if (i < 0 || i >= grid.size()) throw std::out_of_range("gradient_at: interval index out of range");
    return grid[i].gradient;
}

}  // namespace htrain
