#include "htrain/socp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace htrain {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct Cones {
    int linear = 0;
    std::vector<int> soc_dims;
    std::vector<int> soc_offsets;
    int dim = 0;

    Cones(int num_linear, const std::vector<int>& dims) : linear(num_linear), soc_dims(dims) {
        int offset = linear;
        for (int d : dims) {
            soc_offsets.push_back(offset);
            offset += d;
        }
        dim = offset;
    }
    int degree() const { return linear + static_cast<int>(soc_dims.size()); }
    std::size_t count() const { return soc_dims.size(); }
};

// (u0 - |u1|)(u0 + |u1|) without cancellation in the product.
double jnorm2(const Eigen::Ref<const Vec>& u) {
    const double tail = u.tail(u.size() - 1).norm();
    return (u(0) - tail) * (u(0) + tail);
}

// Largest alpha such that -alpha e <= u in cone order (min "eigenvalue").
double min_eigenvalue(const Vec& u, const Cones& cones) {
    double lowest = std::numeric_limits<double>::infinity();
    if (cones.linear > 0) lowest = u.head(cones.linear).minCoeff();
    for (std::size_t k = 0; k < cones.count(); ++k) {
        const auto block = u.segment(cones.soc_offsets[k], cones.soc_dims[k]);
        lowest = std::min(lowest, block(0) - block.tail(block.size() - 1).norm());
    }
    return lowest;
}

void add_identity(Vec& u, const Cones& cones, double amount) {
    u.head(cones.linear).array() += amount;
    for (std::size_t k = 0; k < cones.count(); ++k) u(cones.soc_offsets[k]) += amount;
}

void bring_to_cone(Vec& u, const Cones& cones) {
    const double lowest = min_eigenvalue(u, cones);
    if (lowest <= 0.0) add_identity(u, cones, 1.0 - lowest);
}

Vec conic_product(const Vec& u, const Vec& v, const Cones& cones) {
    Vec w(u.size());
    w.head(cones.linear) = u.head(cones.linear).cwiseProduct(v.head(cones.linear));
    for (std::size_t k = 0; k < cones.count(); ++k) {
        const int o = cones.soc_offsets[k], d = cones.soc_dims[k];
        w(o) = u.segment(o, d).dot(v.segment(o, d));
        w.segment(o + 1, d - 1) = u(o) * v.segment(o + 1, d - 1) + v(o) * u.segment(o + 1, d - 1);
    }
    return w;
}

// Solve lambda o x = w.
Vec conic_division(const Vec& lambda, const Vec& w, const Cones& cones) {
    Vec x(w.size());
    x.head(cones.linear) = w.head(cones.linear).cwiseQuotient(lambda.head(cones.linear));
    for (std::size_t k = 0; k < cones.count(); ++k) {
        const int o = cones.soc_offsets[k], d = cones.soc_dims[k];
        const auto l1 = lambda.segment(o + 1, d - 1);
        const auto w1 = w.segment(o + 1, d - 1);
        const double det = jnorm2(lambda.segment(o, d));
        const double x0 = (lambda(o) * w(o) - l1.dot(w1)) / det;
        x(o) = x0;
        x.segment(o + 1, d - 1) = (w1 - x0 * l1) / lambda(o);
    }
    return x;
}

double max_step(const Vec& lambda, const Vec& direction, const Cones& cones) {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < cones.linear; ++i) {
        if (direction(i) < 0.0) alpha = std::min(alpha, -lambda(i) / direction(i));
    }
    for (std::size_t k = 0; k < cones.count(); ++k) {
        const int o = cones.soc_offsets[k], d = cones.soc_dims[k];
        const auto lk = lambda.segment(o, d);
        const auto dk = direction.segment(o, d);
        const double norm = std::sqrt(jnorm2(lk));
        const Vec bar = lk / norm;
        const double bar_dot = bar(0) * dk(0) - bar.tail(d - 1).dot(dk.tail(d - 1));
        const double rho0 = bar_dot / norm;
        const double factor = (bar_dot + dk(0)) / (bar(0) + 1.0);
        const Vec rho1 = (dk.tail(d - 1) - factor * bar.tail(d - 1)) / norm;
        const double sigma = rho1.norm() - rho0;
        if (sigma > 0.0) alpha = std::min(alpha, 1.0 / sigma);
    }
    return alpha;
}

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
struct NtScaling {
    Vec lp;  // sqrt(s / z)
    std::vector<Eigen::MatrixXd> soc_w, soc_winv;
    Vec lambda;

    NtScaling(const Vec& s, const Vec& z, const Cones& cones) {
        lp = (s.head(cones.linear).array() / z.head(cones.linear).array()).sqrt();
        for (std::size_t k = 0; k < cones.count(); ++k) {
            const int o = cones.soc_offsets[k], d = cones.soc_dims[k];
            const auto sk = s.segment(o, d);
            const auto zk = z.segment(o, d);
            const double s_norm = std::sqrt(jnorm2(sk));
            const double z_norm = std::sqrt(jnorm2(zk));
            const Vec s_bar = sk / s_norm;
            const Vec z_bar = zk / z_norm;
            const double gamma = std::sqrt((1.0 + s_bar.dot(z_bar)) / 2.0);
            Vec w_bar = s_bar;
            w_bar(0) += z_bar(0);
            w_bar.tail(d - 1) -= z_bar.tail(d - 1);
            w_bar /= 2.0 * gamma;
            const double eta = std::sqrt(s_norm / z_norm);
            const auto w1 = w_bar.tail(d - 1);
            Eigen::MatrixXd core = Eigen::MatrixXd::Identity(d, d);
            core(0, 0) = w_bar(0);
            core.block(0, 1, 1, d - 1) = w1.transpose();
            core.block(1, 0, d - 1, 1) = w1;
            core.block(1, 1, d - 1, d - 1) += w1 * w1.transpose() / (1.0 + w_bar(0));
            Eigen::MatrixXd inverse = core;
            inverse.block(0, 1, 1, d - 1) *= -1.0;
            inverse.block(1, 0, d - 1, 1) *= -1.0;
            soc_w.push_back(eta * core);
            soc_winv.push_back(inverse / eta);
        }
        lambda = apply(z, cones);
    }

    Vec apply(const Vec& u, const Cones& cones) const {
        Vec out(u.size());
        out.head(cones.linear) = lp.cwiseProduct(u.head(cones.linear));
        for (std::size_t k = 0; k < cones.count(); ++k) {
            out.segment(cones.soc_offsets[k], cones.soc_dims[k]) = soc_w[k] * u.segment(cones.soc_offsets[k], cones.soc_dims[k]);
        }
        return out;
    }
    // W^{-T} u (W is symmetric).
    Vec apply_inverse(const Vec& u, const Cones& cones) const {
        Vec out(u.size());
        out.head(cones.linear) = u.head(cones.linear).cwiseQuotient(lp);
        for (std::size_t k = 0; k < cones.count(); ++k) {
            out.segment(cones.soc_offsets[k], cones.soc_dims[k]) =
                soc_winv[k] * u.segment(cones.soc_offsets[k], cones.soc_dims[k]);
        }
        return out;
    }
};

// Quasi-definite KKT system [[dI, A', G'], [A, -dI, 0], [G, 0, -W'W - dI]].
class KktSystem {
public:
    KktSystem(const SpMat& a, const SpMat& g, const Cones& cones, double reg, int refine)
        : a_(a), g_(g), cones_(cones), reg_(reg), refine_(refine) {
        n_ = static_cast<int>(a.cols());
        p_ = static_cast<int>(a.rows());
        m_ = static_cast<int>(g.rows());
    }

    bool factor(const NtScaling* scaling) {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(2 * (a_.nonZeros() + g_.nonZeros()) + n_ + p_ + 16 * m_));
        for (int i = 0; i < n_; ++i) triplets.emplace_back(i, i, reg_);
        for (int col = 0; col < n_; ++col) {
            for (SpMat::InnerIterator it(a_, col); it; ++it) {
                triplets.emplace_back(n_ + it.row(), col, it.value());
                triplets.emplace_back(col, n_ + it.row(), it.value());
            }
            for (SpMat::InnerIterator it(g_, col); it; ++it) {
                triplets.emplace_back(n_ + p_ + it.row(), col, it.value());
                triplets.emplace_back(col, n_ + p_ + it.row(), it.value());
            }
        }
        for (int i = 0; i < p_; ++i) triplets.emplace_back(n_ + i, n_ + i, -reg_);
        const int base = n_ + p_;
        for (int i = 0; i < cones_.linear; ++i) {
            const double w = scaling ? scaling->lp(i) : 1.0;
            triplets.emplace_back(base + i, base + i, -w * w - reg_);
        }
        for (std::size_t k = 0; k < cones_.count(); ++k) {
            const int o = cones_.soc_offsets[k], d = cones_.soc_dims[k];
            Eigen::MatrixXd block = Eigen::MatrixXd::Identity(d, d);
            if (scaling) block = scaling->soc_w[k] * scaling->soc_w[k];
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) {
                    triplets.emplace_back(base + o + r, base + o + c, -block(r, c) - (r == c ? reg_ : 0.0));
                }
            }
        }
        const int size = n_ + p_ + m_;
        matrix_.resize(size, size);
        matrix_.setFromTriplets(triplets.begin(), triplets.end());
        if (!analyzed_) {
            ldlt_.analyzePattern(matrix_);
            analyzed_ = true;
        }
        diagonal_ = matrix_.diagonal();
        ldlt_.factorize(matrix_);
        return ldlt_.info() == Eigen::Success;
    }

    Vec solve(const Vec& rhs) const {
        Vec sol = ldlt_.solve(rhs);
        Vec residual = rhs - unregularized_product(sol);
        double error = scaled_error(residual, rhs, sol);
        for (int step = 0; step < refine_ && error > 1e-15; ++step) {
            const Vec candidate = sol + ldlt_.solve(residual);
            Vec candidate_residual = rhs - unregularized_product(candidate);
            const double candidate_error = scaled_error(candidate_residual, rhs, candidate);
            if (!(candidate_error < error)) break;
            sol = candidate;
            residual = std::move(candidate_residual);
            error = candidate_error;
        }
        return sol;
    }

private:
    // Componentwise residual relative to the local magnitude of the system.
    double scaled_error(const Vec& residual, const Vec& rhs, const Vec& sol) const {
        const Vec magnitude = 1.0 + rhs.array().abs() + (diagonal_.array() * sol.array()).abs();
        return residual.cwiseQuotient(magnitude).lpNorm<Eigen::Infinity>();
    }

    Vec unregularized_product(const Vec& v) const {
        Vec out = matrix_ * v;
        out.head(n_) -= reg_ * v.head(n_);
        out.segment(n_, p_) += reg_ * v.segment(n_, p_);
        out.tail(m_) += reg_ * v.tail(m_);
        return out;
    }

    const SpMat& a_;
    const SpMat& g_;
    const Cones& cones_;
    double reg_;
    int refine_;
    int n_ = 0, p_ = 0, m_ = 0;
    SpMat matrix_;
    Vec diagonal_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    bool analyzed_ = false;
};

struct Equilibration {
    Vec col;   // D
    Vec eq;    // E
    Vec cone;  // F
    double objective = 1.0;
};

Equilibration equilibrate(SpMat& a, SpMat& g, const Cones& cones, int passes, const Vec& initial) {
    const int n = static_cast<int>(a.cols());
    Equilibration eq{initial, Vec::Ones(a.rows()), Vec::Ones(g.rows()), 1.0};
    a = a * initial.asDiagonal();
    g = g * initial.asDiagonal();
    auto safe = [](double norm) { return norm > 0.0 ? 1.0 / std::sqrt(norm) : 1.0; };
    for (int pass = 0; pass < passes; ++pass) {
        Vec col_norm = Vec::Zero(n);
        Vec a_row = Vec::Zero(a.rows());
        Vec g_row = Vec::Zero(g.rows());
        for (int c = 0; c < n; ++c) {
            for (SpMat::InnerIterator it(a, c); it; ++it) {
                col_norm(c) = std::max(col_norm(c), std::abs(it.value()));
                a_row(it.row()) = std::max(a_row(it.row()), std::abs(it.value()));
            }
            for (SpMat::InnerIterator it(g, c); it; ++it) {
                col_norm(c) = std::max(col_norm(c), std::abs(it.value()));
                g_row(it.row()) = std::max(g_row(it.row()), std::abs(it.value()));
            }
        }
        for (std::size_t k = 0; k < cones.count(); ++k) {
            auto block = g_row.segment(cones.soc_offsets[k], cones.soc_dims[k]);
            block.setConstant(block.maxCoeff());
        }
        const Vec d = col_norm.unaryExpr(safe);
        const Vec e = a_row.unaryExpr(safe);
        const Vec f = g_row.unaryExpr(safe);
        a = e.asDiagonal() * a * d.asDiagonal();
        g = f.asDiagonal() * g * d.asDiagonal();
        eq.col = eq.col.cwiseProduct(d);
        eq.eq = eq.eq.cwiseProduct(e);
        eq.cone = eq.cone.cwiseProduct(f);
    }
    return eq;
}

}  // namespace

SolverResult solve_cone_program(const ConeProgram& program, const SolverSettings& settings) {
    const Cones cones(program.num_linear, program.soc_dims);
    SpMat a = program.eq_matrix;
    SpMat g = program.cone_matrix;
    const Vec initial =
        program.variable_scale.size() == program.num_vars ? program.variable_scale : Vec(Vec::Ones(program.num_vars));
    const Equilibration scale = equilibrate(a, g, cones, settings.equilibration_passes, initial);
    const Vec b = scale.eq.cwiseProduct(program.eq_rhs);
    const Vec h = scale.cone.cwiseProduct(program.cone_rhs);
    Vec c = scale.col.cwiseProduct(program.objective);
    const double c_max = c.lpNorm<Eigen::Infinity>();
    const double c_scale = c_max > 0.0 ? 1.0 / c_max : 1.0;
    c *= c_scale;

    const int n = program.num_vars;
    const int p = static_cast<int>(b.size());
    const int m = static_cast<int>(h.size());
    KktSystem kkt(a, g, cones, settings.static_regularization, settings.refinement_steps);

    SolverResult result;
    auto finalize = [&](const Vec& x, const Vec& y, const Vec& z, const Vec& s, double tau) {
        result.x = scale.col.cwiseProduct(x) / tau;
        result.y = scale.eq.cwiseProduct(y) / (tau * c_scale);
        result.z = scale.cone.cwiseProduct(z) / (tau * c_scale);
        result.s = s.cwiseQuotient(scale.cone) / tau;
        result.primal_objective = program.objective.dot(result.x) + program.objective_constant;
        result.dual_objective = -program.eq_rhs.dot(result.y) - program.cone_rhs.dot(result.z) + program.objective_constant;
        return result;
    };

    // Initial point.
    if (!kkt.factor(nullptr)) return result;
    Vec x(n), y(p), z(m), s(m);
    {
        Vec rhs = Vec::Zero(n + p + m);
        rhs.segment(n, p) = b;
        rhs.tail(m) = h;
        const Vec sol = kkt.solve(rhs);
        x = sol.head(n);
        s = -sol.tail(m);
        bring_to_cone(s, cones);
        rhs.setZero();
        rhs.head(n) = -c;
        const Vec dual = kkt.solve(rhs);
        y = dual.segment(n, p);
        z = dual.tail(m);
        bring_to_cone(z, cones);
    }
    double tau = 1.0, kappa = 1.0;

    const double b_norm = std::max(1.0, b.norm());
    const double h_norm = std::max(1.0, h.norm());
    const double c_norm = std::max(1.0, c.norm());
    const int degree = cones.degree();

    for (int iter = 0;; ++iter) {
        result.iterations = iter;
        const Vec rx = a.transpose() * y + g.transpose() * z + c * tau;
        const Vec ry = -(a * x) + b * tau;
        const Vec rz = s + g * x - h * tau;
        const double cx = c.dot(x), by = b.dot(y), hz = h.dot(z);
        const double rt = kappa + cx + by + hz;

        const double gap = s.dot(z);
        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        const double pres = std::max((a * x / tau - b).norm() / b_norm, (g * x / tau + s / tau - h).norm() / h_norm);
        const double dres = (a.transpose() * y / tau + g.transpose() * z / tau + c).norm() / c_norm;
        const double scaled_gap = gap / (tau * tau);
        const double denom = std::max(std::abs(pcost), std::abs(dcost));
        const double relgap = denom > 0.0 ? scaled_gap / denom : std::numeric_limits<double>::infinity();
        result.gap = scaled_gap / c_scale;
        result.relative_gap = relgap;
        result.primal_residual = pres;
        result.dual_residual = dres;

        if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
            result.status = SolveStatus::numerical_failure;
            return result;
        }
        if (pres < settings.feastol && dres < settings.feastol &&
            (scaled_gap < settings.abstol || relgap < settings.reltol)) {
            finalize(x, y, z, s, tau);
            result.status = SolveStatus::optimal;
            return result;
        }
        if (tau < kappa) {
            const double yz_norm = std::max(1.0, y.norm() + z.norm());
            const double pinf = (a.transpose() * y + g.transpose() * z).norm() / yz_norm;
            if (by + hz < 0.0 && (by + hz) / yz_norm < -settings.reltol && pinf < settings.feastol) {
                result.status = SolveStatus::infeasible;
                result.y = y;
                result.z = z;
                return result;
            }
            const double xs_norm = std::max(1.0, x.norm() + s.norm());
            const double x_norm = std::max(1.0, x.norm());
            const double dinf = std::max((a * x).norm() / x_norm, (g * x + s).norm() / xs_norm);
            if (cx < 0.0 && cx / x_norm < -settings.reltol && dinf < settings.feastol) {
                result.status = SolveStatus::unbounded;
                result.x = x;
                return result;
            }
        }
        if (iter >= settings.max_iterations) {
            finalize(x, y, z, s, tau);
            result.status = SolveStatus::numerical_failure;
            return result;
        }

        const NtScaling scaling(s, z, cones);
        const Vec& lambda = scaling.lambda;
        if (!kkt.factor(&scaling)) {
            finalize(x, y, z, s, tau);
            result.status = SolveStatus::numerical_failure;
            return result;
        }
        Vec rhs1(n + p + m);
        rhs1 << -c, b, h;
        const Vec sol1 = kkt.solve(rhs1);
        const double tau_den_base = c.dot(sol1.head(n)) + b.dot(sol1.segment(n, p)) + h.dot(sol1.tail(m));

        struct Direction {
            Vec dx, dy, dz, ds;
            double dtau, dkappa;
        };
        auto direction = [&](double eta, const Vec& ds_target, double dkappa_target) {
            Vec rhs2(n + p + m);
            rhs2 << -eta * rx, eta * ry, -eta * rz + scaling.apply(conic_division(lambda, ds_target, cones), cones);
            const Vec sol2 = kkt.solve(rhs2);
            Direction dir;
            const double num = eta * rt - dkappa_target / tau + c.dot(sol2.head(n)) + b.dot(sol2.segment(n, p)) +
                               h.dot(sol2.tail(m));
            dir.dtau = num / (kappa / tau - tau_den_base);
            dir.dx = sol2.head(n) + dir.dtau * sol1.head(n);
            dir.dy = sol2.segment(n, p) + dir.dtau * sol1.segment(n, p);
            dir.dz = sol2.tail(m) + dir.dtau * sol1.tail(m);
            dir.dkappa = -(dkappa_target + kappa * dir.dtau) / tau;
            const Vec w_dz = scaling.apply(dir.dz, cones);
            dir.ds = -scaling.apply(conic_division(lambda, ds_target, cones) + w_dz, cones);
            return dir;
        };
        auto step_length = [&](const Direction& dir) {
            double alpha = std::min(max_step(lambda, scaling.apply_inverse(dir.ds, cones), cones),
                                    max_step(lambda, scaling.apply(dir.dz, cones), cones));
            if (dir.dtau < 0.0) alpha = std::min(alpha, -tau / dir.dtau);
            if (dir.dkappa < 0.0) alpha = std::min(alpha, -kappa / dir.dkappa);
            return alpha;
        };

        const Vec lambda_sq = conic_product(lambda, lambda, cones);
        const Direction affine = direction(1.0, lambda_sq, tau * kappa);
        const double alpha_affine = std::min(1.0, step_length(affine));
        const double sigma = std::clamp(std::pow(1.0 - alpha_affine, 3), 0.0, 1.0);
        const double mu = (gap + tau * kappa) / (degree + 1);

        Vec ds_target = lambda_sq + conic_product(scaling.apply_inverse(affine.ds, cones),
                                                  scaling.apply(affine.dz, cones), cones);
        add_identity(ds_target, cones, -sigma * mu);
        const double dkappa_target = tau * kappa + affine.dkappa * affine.dtau - sigma * mu;
        const Direction combined = direction(1.0 - sigma, ds_target, dkappa_target);
        const double alpha = std::min(1.0, settings.step_fraction * step_length(combined));
        if (!(alpha > 1e-12)) {
            finalize(x, y, z, s, tau);
            result.status = SolveStatus::numerical_failure;
            return result;
        }
        x += alpha * combined.dx;
        y += alpha * combined.dy;
        z += alpha * combined.dz;
        s += alpha * combined.ds;
        tau += alpha * combined.dtau;
        kappa += alpha * combined.dkappa;
    }
}

}  // namespace htrain
