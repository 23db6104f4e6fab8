#include "htrain/cone_program.hpp"

#include <iomanip>

namespace htrain {

const char* to_string(Family family) {
    switch (family) {
        case Family::kinetic: return "kinetic";
        case Family::soc_update: return "soc_update";
        case Family::lambda_zeta_definition: return "lambda_zeta_definition";
        case Family::temperature_update: return "temperature_update";
        case Family::compiled_thermal: return "compiled_thermal";
        case Family::initial_state: return "initial_state";
        case Family::charge_sustaining: return "charge_sustaining";
        case Family::journey_time: return "journey_time";
        case Family::station_stop: return "station_stop";
        case Family::stationary_brake: return "stationary_brake";
        case Family::state_bounds: return "state_bounds";
        case Family::speed_bounds: return "speed_bounds";
        case Family::lambda_bounds: return "lambda_bounds";
        case Family::control_bounds: return "control_bounds";
        case Family::motor_power: return "motor_power";
        case Family::battery_power: return "battery_power";
        case Family::fuelcell_power: return "fuelcell_power";
        case Family::cooling_mccormick: return "cooling_mccormick";
        case Family::battery_split: return "battery_split";
        case Family::speed_time: return "speed_time";
        case Family::kinetic_energy: return "kinetic_energy";
        case Family::motor_balance: return "motor_balance";
        case Family::battery_loss: return "battery_loss";
        case Family::objective_epigraph: return "objective_epigraph";
    }
    return "unknown";
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
    terms.insert(terms.end(), other.terms.begin(), other.terms.end());
    constant += other.constant;
    return *this;
}

AffineExpr& AffineExpr::operator*=(double factor) {
    for (auto& term : terms) term.coef *= factor;
    constant *= factor;
    return *this;
}

double AffineExpr::evaluate(const Eigen::VectorXd& x) const {
    double value = constant;
    for (const auto& term : terms) value += term.coef * x(term.var);
    return value;
}

AffineExpr operator+(AffineExpr lhs, const AffineExpr& rhs) { return lhs += rhs; }
AffineExpr operator-(AffineExpr lhs, const AffineExpr& rhs) { return lhs += -1.0 * rhs; }
AffineExpr operator*(double factor, AffineExpr expr) { return expr *= factor; }

AffineExpr var(int index, double coef) {
    AffineExpr expr;
    expr.add(index, coef);
    return expr;
}

std::string VariableLayout::name(int index) const {
    static const char* node_names[] = {"z", "zeta", "T"};
    static const char* interval_names[] = {"F_m", "F_brk", "F_fc", "F_batt", "F_act", "v", "lambda_v",
                                           "lambda_zeta", "lambda_T", "dzeta", "dT", "F_dis", "F_chr"};
    if (index < control_base()) {
        return std::string(node_names[index / nodes()]) + "[" + std::to_string(index % nodes()) + "]";
    }
    const int offset = index - control_base();
    if (offset < 13 * intervals) {
        return std::string(interval_names[offset / intervals]) + "[" + std::to_string(offset % intervals) + "]";
    }
    return "x" + std::to_string(index);
}

std::map<Family, int> ConeProgram::census() const {
    std::map<Family, int> counts;
    for (auto family : eq_families) ++counts[family];
    for (auto family : linear_families) ++counts[family];
    for (auto family : soc_families) ++counts[family];
    return counts;
}

ProgramAssembler::ProgramAssembler(VariableLayout layout) : layout_(layout) {}

int ProgramAssembler::add_variable(std::string name) {
    extra_names_.push_back(std::move(name));
    return layout_.total() + static_cast<int>(extra_names_.size()) - 1;
}

void ProgramAssembler::add_objective(const AffineExpr& expr) { objective_ += expr; }

void ProgramAssembler::add_equality(const AffineExpr& expr, Family family) { equalities_.push_back({expr, family}); }

void ProgramAssembler::add_inequality(const AffineExpr& expr, Family family) {
    inequalities_.push_back({expr, family});
}

void ProgramAssembler::add_cone(const std::vector<AffineExpr>& members, Family family) {
    cones_.emplace_back(members, family);
}

void ProgramAssembler::add_rotated_cone(const std::vector<AffineExpr>& w, const AffineExpr& x,
                                        const AffineExpr& y, Family family) {
    std::vector<AffineExpr> members;
    members.push_back(x + y);
    for (const auto& entry : w) members.push_back(2.0 * entry);
    members.push_back(x - y);
    add_cone(members, family);
}

void ProgramAssembler::set_variable_scale(int var, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("variable scale must be positive");
    variable_scale_[var] = scale;
}

ConeProgram ProgramAssembler::finish() const {
    ConeProgram program;
    program.layout = layout_;
    program.extra_names = extra_names_;
    program.num_vars = layout_.total() + static_cast<int>(extra_names_.size());

    program.variable_scale = Eigen::VectorXd::Ones(program.num_vars);
    for (const auto& [var, scale] : variable_scale_) program.variable_scale(var) = scale;

    program.objective = Eigen::VectorXd::Zero(program.num_vars);
    for (const auto& term : objective_.terms) program.objective(term.var) += term.coef;
    program.objective_constant = objective_.constant;

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> eq_triplets;
    program.eq_rhs.resize(static_cast<Eigen::Index>(equalities_.size()));
    for (std::size_t r = 0; r < equalities_.size(); ++r) {
        const auto& row = equalities_[r];
        for (const auto& term : row.expr.terms) eq_triplets.emplace_back(static_cast<int>(r), term.var, term.coef);
        program.eq_rhs(static_cast<Eigen::Index>(r)) = -row.expr.constant;
        program.eq_families.push_back(row.family);
    }
    program.eq_matrix.resize(static_cast<Eigen::Index>(equalities_.size()), program.num_vars);
    program.eq_matrix.setFromTriplets(eq_triplets.begin(), eq_triplets.end());

    // Inequality expr <= 0 becomes s = -expr >= 0: G row = coefficients, h = -constant.
    // Cone member u = a'x + d becomes s = h - G x with G row = -a, h = d.
    std::size_t rows = inequalities_.size();
    for (const auto& cone : cones_) rows += cone.first.size();
    std::vector<Triplet> cone_triplets;
    program.cone_rhs.resize(static_cast<Eigen::Index>(rows));
    int row = 0;
    for (const auto& ineq : inequalities_) {
        for (const auto& term : ineq.expr.terms) cone_triplets.emplace_back(row, term.var, term.coef);
        program.cone_rhs(row) = -ineq.expr.constant;
        program.linear_families.push_back(ineq.family);
        ++row;
    }
    program.num_linear = row;
    for (const auto& [members, family] : cones_) {
        for (const auto& member : members) {
            for (const auto& term : member.terms) cone_triplets.emplace_back(row, term.var, -term.coef);
            program.cone_rhs(row) = member.constant;
            ++row;
        }
        program.soc_dims.push_back(static_cast<int>(members.size()));
        program.soc_families.push_back(family);
    }
    program.cone_matrix.resize(static_cast<Eigen::Index>(rows), program.num_vars);
    program.cone_matrix.setFromTriplets(cone_triplets.begin(), cone_triplets.end());
    return program;
}

namespace {

void write_triplets(const Eigen::SparseMatrix<double>& matrix, std::ostream& out) {
    for (int col = 0; col < matrix.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, col); it; ++it) {
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
}

}  // namespace

void write_program_text(const ConeProgram& program, std::ostream& out) {
    const auto old_precision = out.precision(17);
    out << "cone_program 1\n";
    out << "variables " << program.num_vars << '\n';
    for (int k = 0; k < program.num_vars; ++k) {
        const int extra = k - program.layout.total();
        out << k << ' ' << (extra >= 0 ? program.extra_names[static_cast<std::size_t>(extra)] : program.layout.name(k))
            << '\n';
    }
    out << "objective " << program.objective.size() << ' ' << program.objective_constant << '\n';
    for (int k = 0; k < program.objective.size(); ++k) {
        if (program.objective(k) != 0.0) out << k << ' ' << program.objective(k) << '\n';
    }
    out << "end\n";
    out << "equalities " << program.num_eq() << ' ' << program.eq_matrix.nonZeros() << '\n';
    write_triplets(program.eq_matrix, out);
    out << "rhs\n";
    for (int r = 0; r < program.num_eq(); ++r) out << program.eq_rhs(r) << ' ' << to_string(program.eq_families[static_cast<std::size_t>(r)]) << '\n';
    out << "cone_rows " << program.num_cone_rows() << ' ' << program.cone_matrix.nonZeros() << '\n';
    write_triplets(program.cone_matrix, out);
    out << "rhs\n";
    for (int r = 0; r < program.num_cone_rows(); ++r) out << program.cone_rhs(r) << '\n';
    out << "linear " << program.num_linear << '\n';
    for (auto family : program.linear_families) out << to_string(family) << '\n';
    out << "soc " << program.soc_dims.size() << '\n';
    for (std::size_t k = 0; k < program.soc_dims.size(); ++k) {
        out << program.soc_dims[k] << ' ' << to_string(program.soc_families[k]) << '\n';
    }
    out.precision(old_precision);
}

}  // namespace htrain
