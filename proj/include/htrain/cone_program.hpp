#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "htrain/journey.hpp"

namespace htrain {

enum class Family {
    // equalities
    kinetic,
    soc_update,
    lambda_zeta_definition,
    temperature_update,
    compiled_thermal,
    initial_state,
    charge_sustaining,
    journey_time,
    station_stop,
    stationary_brake,
    // linear inequalities
    state_bounds,
    speed_bounds,
    lambda_bounds,
    control_bounds,
    motor_power,
    battery_power,
    fuelcell_power,
    cooling_mccormick,
    battery_split,
    // second-order cones
    speed_time,
    kinetic_energy,
    motor_balance,
    battery_loss,
    objective_epigraph,
};

const char* to_string(Family family);

struct LinearTerm {
    int var;
    double coef;
};

// Affine expression sum(coef * x[var]) + constant.
struct AffineExpr {
    std::vector<LinearTerm> terms;
    double constant = 0.0;

    AffineExpr() = default;
    AffineExpr(double value) : constant(value) {}

    AffineExpr& add(int var, double coef) {
        if (coef != 0.0) terms.push_back({var, coef});
        return *this;
    }
    AffineExpr& operator+=(const AffineExpr& other);
    AffineExpr& operator*=(double factor);
    double evaluate(const Eigen::VectorXd& x) const;
};

AffineExpr operator+(AffineExpr lhs, const AffineExpr& rhs);
AffineExpr operator-(AffineExpr lhs, const AffineExpr& rhs);
AffineExpr operator*(double factor, AffineExpr expr);
AffineExpr var(int index, double coef = 1.0);

// Per-interval variable indices of the relaxed program.
struct VariableLayout {
    int intervals = 0;

    int z(int node) const { return node; }
    int zeta(int node) const { return nodes() + node; }
    int temperature(int node) const { return 2 * nodes() + node; }
    int motor_force(int i) const { return control_base() + i; }
    int brake_force(int i) const { return control_base() + intervals + i; }
    int fuelcell_force(int i) const { return control_base() + 2 * intervals + i; }
    int battery_force(int i) const { return control_base() + 3 * intervals + i; }
    int cooling_force(int i) const { return control_base() + 4 * intervals + i; }
    int speed(int i) const { return aux_base() + i; }
    int lambda_v(int i) const { return aux_base() + intervals + i; }
    int lambda_zeta(int i) const { return aux_base() + 2 * intervals + i; }
    int lambda_t(int i) const { return aux_base() + 3 * intervals + i; }
    int delta_zeta(int i) const { return aux_base() + 4 * intervals + i; }
    int delta_t(int i) const { return aux_base() + 5 * intervals + i; }
    int discharge_force(int i) const { return aux_base() + 6 * intervals + i; }
    int charge_force(int i) const { return aux_base() + 7 * intervals + i; }

    int nodes() const { return intervals + 1; }
    int control_base() const { return 3 * nodes(); }
    int aux_base() const { return control_base() + 5 * intervals; }
    int total() const { return aux_base() + 8 * intervals; }
    std::string name(int index) const;
};

// minimize c'x + c0  s.t.  A x = b,  h - G x in R+^l x Q^{q1} x ... x Q^{qk}.
struct ConeProgram {
    int num_vars = 0;
    Eigen::VectorXd objective;
    double objective_constant = 0.0;
    Eigen::SparseMatrix<double> eq_matrix;
    Eigen::VectorXd eq_rhs;
    Eigen::SparseMatrix<double> cone_matrix;
    Eigen::VectorXd cone_rhs;
    int num_linear = 0;
    std::vector<int> soc_dims;
    std::vector<Family> eq_families;
    std::vector<Family> linear_families;
    std::vector<Family> soc_families;
    VariableLayout layout;
    std::vector<std::string> extra_names;  // solver-level variables beyond the layout
    Eigen::VectorXd variable_scale;        // typical magnitudes, a hint for solver column scaling
    SpatialGrid grid;
    double target_time = 0.0;

    int num_eq() const { return static_cast<int>(eq_rhs.size()); }
    int num_cone_rows() const { return static_cast<int>(cone_rhs.size()); }
    std::map<Family, int> census() const;  // rows per linear family, blocks per cone family
    double objective_value(const Eigen::VectorXd& x) const { return objective.dot(x) + objective_constant; }
};

// Collects rows and cones, then emits a ConeProgram with linear rows first.
class ProgramAssembler {
public:
    explicit ProgramAssembler(VariableLayout layout);

    int add_variable(std::string name);
    void set_variable_scale(int var, double scale);
    void add_objective(const AffineExpr& expr);
    void add_equality(const AffineExpr& expr, Family family);  // expr == 0
    void add_inequality(const AffineExpr& expr, Family family);  // expr <= 0
    void add_cone(const std::vector<AffineExpr>& members, Family family);  // ||members[1..]|| <= members[0]
    // ||w||^2 <= x y with x, y >= 0, as ||(2w, x - y)|| <= x + y
    void add_rotated_cone(const std::vector<AffineExpr>& w, const AffineExpr& x, const AffineExpr& y, Family family);

    ConeProgram finish() const;

private:
    struct Row {
        AffineExpr expr;
        Family family;
    };
    VariableLayout layout_;
    std::vector<std::string> extra_names_;
    std::map<int, double> variable_scale_;
    AffineExpr objective_;
    std::vector<Row> equalities_;
    std::vector<Row> inequalities_;
    std::vector<std::pair<std::vector<AffineExpr>, Family>> cones_;
};

// Documented sparse text export; see README for the format.
void write_program_text(const ConeProgram& program, std::ostream& out);

}  // namespace htrain
