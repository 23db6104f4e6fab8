#include "htrain/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "htrain/errors.hpp"

namespace htrain {

namespace {

using nlohmann::json;

// Reads fields from one JSON object and rejects keys that were never read.
class Section {
public:
    Section(const json& node, std::string name) : node_(node), name_(std::move(name)) {
        if (!node_.is_object()) throw InputError(name_ + ": expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    template <typename T>
    void read(const std::string& key, T& target) {
        if (!node_.contains(key)) return;
        seen_.insert(key);
        try {
            target = node_.at(key).get<T>();
        } catch (const json::exception&) {
            throw InputError(name_ + "." + key + ": wrong type");
        }
    }

    template <typename T>
    T require(const std::string& key) {
        if (!node_.contains(key)) throw InputError(name_ + ": missing key '" + key + "'");
        T value{};
        read(key, value);
        return value;
    }

    Section child(const std::string& key) {
        if (!node_.contains(key)) throw InputError(name_ + ": missing key '" + key + "'");
        seen_.insert(key);
        return Section(node_.at(key), name_ + "." + key);
    }

    const json& raw(const std::string& key) {
        if (!node_.contains(key)) throw InputError(name_ + ": missing key '" + key + "'");
        seen_.insert(key);
        return node_.at(key);
    }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (item.key().starts_with("_") || seen_.count(item.key())) continue;
            throw InputError(name_ + ": unknown key '" + item.key() + "'");
        }
    }

private:
    const json& node_;
    std::string name_;
    std::set<std::string> seen_;
};

json parse_json(std::istream& in, const std::string& what) {
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(what + ": " + e.what());
    }
}

void check_schema(Section& section) {
    int version = kSchemaVersion;
    section.read("schema_version", version);
    if (version != kSchemaVersion) {
        throw InputError("unsupported schema_version " + std::to_string(version));
    }
}

BatteryParams read_battery(Section s) {
    BatteryParams b;
    s.read("open_circuit_voltage", b.open_circuit_voltage);
    s.read("resistance", b.resistance);
    s.read("capacity_ah", b.capacity_ah);
    s.read("mass", b.mass);
    s.read("specific_heat", b.specific_heat);
    s.read("heat_transfer", b.heat_transfer);
    s.read("ambient_temperature", b.ambient_temperature);
    s.read("max_temperature", b.max_temperature);
    s.read("power_min", b.power_min);
    s.read("power_max", b.power_max);
    s.read("zeta_min", b.zeta_min);
    s.read("zeta_max", b.zeta_max);
    s.read("cooling_force_max", b.cooling_force_max);
    const bool explicit_dis = s.has("eta_dis");
    const bool explicit_chr = s.has("eta_chr");
    s.read("eta_dis", b.eta_dis);
    s.read("eta_chr", b.eta_chr);
    s.finish();
    if (!explicit_dis || !explicit_chr) {
        const auto [dis, chr] = average_battery_efficiencies(b);
        if (!explicit_dis) b.eta_dis = dis;
        if (!explicit_chr) b.eta_chr = chr;
    }
    b.validate();
    return b;
}

VehicleParams read_vehicle(Section s) {
    VehicleParams v;
    s.read("mass", v.mass);
    s.read("equivalent_mass", v.equivalent_mass);
    s.read("gravity", v.gravity);
    s.read("aux_power", v.aux_power);
    s.read("motor_force_min", v.motor_force_min);
    s.read("motor_force_max", v.motor_force_max);
    s.read("motor_power_min", v.motor_power_min);
    s.read("motor_power_max", v.motor_power_max);
    s.read("brake_force_min", v.brake_force_min);
    s.read("fuelcell_power_min", v.fuelcell_power_min);
    s.read("fuelcell_power_max", v.fuelcell_power_max);
    s.finish();
    v.validate();
    return v;
}

EfficiencyShape read_shape(Section s, EfficiencyShape shape) {
    s.read("peak_efficiency", shape.peak_efficiency);
    s.read("zero_power_efficiency", shape.zero_power_efficiency);
    s.read("knee_power", shape.knee_power);
    s.read("rated_power", shape.rated_power);
    s.read("rated_efficiency", shape.rated_efficiency);
    s.read("load_min", shape.load_min);
    s.read("load_max", shape.load_max);
    s.read("speed_max", shape.speed_max);
    s.read("load_points", shape.load_points);
    s.read("speed_points", shape.speed_points);
    s.read("noise", shape.noise);
    s.finish();
    shape.validate();
    return shape;
}

EfficiencyMap read_table(Section s) {
    EfficiencyMap map;
    const auto axis = s.require<std::string>("load_axis");
    if (axis == "force") {
        map.load_axis = EfficiencyMap::LoadAxis::force;
    } else if (axis == "power") {
        map.load_axis = EfficiencyMap::LoadAxis::power;
    } else {
        throw InputError("map load_axis must be 'force' or 'power'");
    }
    const auto load = s.require<std::vector<double>>("axis_load");
    const auto speed = s.require<std::vector<double>>("axis_speed");
    const auto table = s.require<std::vector<std::vector<double>>>("efficiency");
    s.finish();
    map.axis_load = Eigen::Map<const Eigen::VectorXd>(load.data(), static_cast<Eigen::Index>(load.size()));
    map.axis_speed = Eigen::Map<const Eigen::VectorXd>(speed.data(), static_cast<Eigen::Index>(speed.size()));
    map.efficiency.resize(map.axis_load.size(), map.axis_speed.size());
    if (table.size() != load.size()) throw InputError("map efficiency rows must match axis_load");
    for (std::size_t r = 0; r < table.size(); ++r) {
        if (table[r].size() != speed.size()) throw InputError("map efficiency columns must match axis_speed");
        for (std::size_t c = 0; c < speed.size(); ++c) {
            map.efficiency(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table[r][c];
        }
    }
    map.validate();
    return map;
}

EfficiencyShape fuelcell_shape() {
    EfficiencyShape shape;
    shape.peak_efficiency = 0.55;
    shape.zero_power_efficiency = 0.54;
    shape.knee_power = 100e3;
    shape.rated_power = 400e3;
    shape.rated_efficiency = 0.52;
    shape.load_min = 0.0;
    shape.load_max = 400e3;
    return shape;
}

EfficiencyMap read_map(Section s, bool motor, std::uint64_t seed) {
    if (s.has("synthetic")) {
        const EfficiencyShape shape = read_shape(s.child("synthetic"), motor ? EfficiencyShape{} : fuelcell_shape());
        s.finish();
        return motor ? synth_motor_map(shape, seed) : synth_fuelcell_map(shape, seed);
    }
    return read_table(std::move(s));
}

JourneySpec read_journey(Section s) {
    JourneySpec j;
    j.target_time = s.require<double>("target_time");
    s.read("z0", j.z0);
    s.read("zeta0", j.zeta0);
    s.read("temperature0", j.temperature0);
    s.read("z_stop", j.z_stop);
    s.read("v_min", j.v_min);
    s.read("temperature_margin", j.temperature_margin);
    s.finish();
    j.validate();
    return j;
}

std::optional<Box> read_box(Section& s, const std::string& key) {
    if (!s.has(key)) return std::nullopt;
    const auto pair = s.require<std::vector<double>>(key);
    if (pair.size() != 2 || !(pair[0] < pair[1])) throw InputError(key + ": expected [lo, hi] with lo < hi");
    return Box{pair[0], pair[1]};
}

DpConfig read_dp(Section s) {
    DpConfig d;
    s.read("speed_points", d.speed_points);
    s.read("zeta_points", d.zeta_points);
    s.read("temperature_points", d.temperature_points);
    s.read("time_points", d.time_points);
    d.zeta_range = read_box(s, "zeta_range");
    s.read("cooling_levels", d.cooling_levels);
    s.read("regen_levels", d.regen_levels);
    s.read("interval_cap", d.interval_cap);
    s.read("battery_enabled", d.battery_enabled);
    if (s.has("speed_grid")) d.speed_grid = s.require<std::vector<double>>("speed_grid");
    d.temperature_range = read_box(s, "temperature_range");
    s.finish();
    d.validate();
    return d;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    const std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

ComponentSet parse_components(std::istream& in, std::uint64_t seed) {
    const json doc = parse_json(in, "components");
    Section root(doc, "components");
    check_schema(root);
    ComponentSet set;
    set.battery = read_battery(root.child("battery"));
    set.vehicle = read_vehicle(root.child("vehicle"));
    set.motor_map = read_map(root.child("motor_map"), true, seed);
    set.fuelcell_map = read_map(root.child("fuelcell_map"), false, seed + 1);
    root.finish();
    return set;
}

ComponentSet load_components(const std::filesystem::path& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open component file " + path.string());
    try {
        return parse_components(in, seed);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void RunConfig::set_tolerance(double tol) {
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    optimize.solver.feastol = tol;
    optimize.solver.abstol = tol;
    optimize.solver.reltol = tol;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
    const json doc = parse_json(in, "config");
    Section root(doc, "config");
    check_schema(root);
    RunConfig cfg;
    cfg.track = resolve(base_dir, root.require<std::string>("track"));
    cfg.components = resolve(base_dir, root.require<std::string>("components"));
    if (root.has("output")) cfg.output = resolve(base_dir, root.require<std::string>("output"));
    root.read("seed", cfg.seed);
    cfg.journey = read_journey(root.child("journey"));
    root.read("base_step", cfg.base_step);

    if (root.has("fit")) {
        Section s = root.child("fit");
        s.read("speed_min", cfg.fit.speed_min);
        if (s.has("speed_max")) cfg.fit_speed_max_from_track = false;
        s.read("speed_max", cfg.fit.speed_max);
        s.read("speed_points", cfg.fit.speed_points);
        s.read("rms_ceiling", cfg.fit.rms_ceiling);
        s.read("allow_cross_term", cfg.fit.allow_cross_term);
        s.finish();
    }
    if (root.has("weights")) {
        Section s = root.child("weights");
        s.read("cooling_weight", cfg.weights.cooling_weight);
        s.read("thermal_tiebreak", cfg.weights.thermal_tiebreak);
        s.finish();
    }
    if (root.has("solver")) {
        Section s = root.child("solver");
        if (s.has("tol")) cfg.set_tolerance(s.require<double>("tol"));
        s.read("max_iterations", cfg.optimize.solver.max_iterations);
        s.read("mccormick_refinements", cfg.optimize.mccormick_refinements);
        s.read("refinement_width", cfg.optimize.refinement_width);
        s.read("export_program", cfg.export_program);
        s.finish();
    }
    if (root.has("tightness")) {
        Section s = root.child("tightness");
        s.read("tol", cfg.tightness.tol);
        s.read("battery_tol", cfg.tightness.battery_tol);
        s.read("interior_margin", cfg.tightness.interior_margin);
        s.read("battery_active_fraction", cfg.tightness.battery_active_fraction);
        s.read("temperature_active_tol", cfg.tightness.temperature_active_tol);
        s.finish();
    }
    if (root.has("validation")) {
        Section s = root.child("validation");
        s.read("substeps", cfg.simulation.substeps);
        s.read("speed_fraction", cfg.thresholds.speed_fraction);
        s.read("soc_drift", cfg.thresholds.soc_drift);
        s.read("temperature_divergence", cfg.thresholds.temperature_divergence);
        s.read("temperature_excess", cfg.thresholds.temperature_excess);
        s.finish();
        if (cfg.simulation.substeps < 1) throw InputError("validation.substeps must be positive");
    }
    if (root.has("dp")) cfg.dp = read_dp(root.child("dp"));
    root.finish();
    if (!(cfg.base_step > 0.0)) throw InputError("base_step must be positive");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file " + path.string());
    try {
        return parse_run_config(in, path.parent_path());
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

Setup prepare(const RunConfig& config) {
    Setup setup;
    setup.track = load_track(config.track);
    setup.components = load_components(config.components, config.seed);

    ProblemInstance& inst = setup.instance;
    inst.grid = build_grid(setup.track, config.base_step, config.journey);
    inst.spec = config.journey;
    inst.resistance = {setup.track.davis_a, setup.track.davis_b, setup.track.davis_c};
    inst.vehicle = setup.components.vehicle;
    inst.battery = setup.components.battery;
    inst.weights = config.weights;

    FitOptions fit = config.fit;
    if (config.fit_speed_max_from_track) {
        double top = 0.0;
        for (const auto& sample : setup.track.speed_limits) top = std::max(top, sample.value);
        fit.speed_max = top;
    }
    inst.surrogates.motor = fit_motor(setup.components.motor_map, inst.vehicle, fit);
    inst.surrogates.fuelcell = fit_fuelcell(setup.components.fuelcell_map, inst.vehicle, fit);
    inst.surrogates.battery = fit_battery(inst.battery);
    if (inst.surrogates.battery.rms_rel_error > fit.rms_ceiling) {
        throw FitError("battery fit quality below ceiling: rms_rel_error " +
                       std::to_string(inst.surrogates.battery.rms_rel_error) + " > " + std::to_string(fit.rms_ceiling));
    }
    if (fit.allow_cross_term) {
        // Cross terms are reported only; the cone program always uses the separable refit.
        FitOptions separable = fit;
        separable.allow_cross_term = false;
        inst.surrogates.motor = fit_motor(setup.components.motor_map, inst.vehicle, separable);
        inst.surrogates.fuelcell = fit_fuelcell(setup.components.fuelcell_map, inst.vehicle, separable);
    }
    inst.validate();
    return setup;
}

}  // namespace htrain
