#include "stto/optimizer.hpp"

#include "stto/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stto {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::GradientDescent: return "gd";
        case Method::NcgHs: return "ncg";
    }
    return "?";
}

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::MaxIters: return "max-iters";
        case Termination::GradTol: return "grad-tol";
        case Termination::LineSearchFailure: return "line-search-failure";
    }
    return "?";
}

void OptimizeConfig::validate() const {
    if (max_iters == 0) throw ArgumentError("max_iters must be positive");
    if (!(grad_tol >= 0.0)) throw ArgumentError("grad_tol must be non-negative");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < 1.0)) throw ArgumentError("wolfe_c1 must lie in (0, 1)");
    if (!(wolfe_c2 > 0.0 && wolfe_c2 < 1.0)) throw ArgumentError("wolfe_c2 must lie in (0, 1)");
    if (!(wolfe_c1 < wolfe_c2)) throw ArgumentError("wolfe_c1 must be smaller than wolfe_c2");
    if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
        throw ArgumentError("initial_step must be positive");
    }
    if (max_line_search_evals == 0) throw ArgumentError("max_line_search_evals must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::pair<double, std::vector<double>> checked_eval(const ObjectiveFn& fg,
                                                    std::span<const double> x) {
    auto result = fg(x);
    if (result.second.size() != x.size()) {
        throw ShapeError("gradient length " + std::to_string(result.second.size()) +
                         " does not match parameter length " + std::to_string(x.size()));
    }
    if (!std::isfinite(result.first)) {
        throw NumericError("objective evaluated to a non-finite value");
    }
    for (double v : result.second) {
        if (!std::isfinite(v)) throw NumericError("gradient contains a non-finite value");
    }
    return result;
}

// Safeguarded cubic/quadratic step of Moré and Thuente. (stx, fx, dx) is the
// best step so far, (sty, fy, dy) the other interval endpoint, (stp, fp, dp)
// the current trial. Updates the interval and returns the next trial in stp.
void mt_step(double& stx, double& fx, double& dx, double& sty, double& fy, double& dy,
             double& stp, double fp, double dp, bool& brackt, double stpmin, double stpmax) {
    const double sgnd = dp * (dx / std::abs(dx));
    double stpf = 0.0;

    if (fp > fx) {
        // Higher function value: the minimum is bracketed.
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::abs(theta), std::abs(dx), std::abs(dp)});
        double gamma = s * std::sqrt((theta / s) * (theta / s) - (dx / s) * (dp / s));
        if (stp < stx) gamma = -gamma;
        const double p = (gamma - dx) + theta;
        const double q = ((gamma - dx) + gamma) + dp;
        const double r = p / q;
        const double stpc = stx + r * (stp - stx);
        const double stpq = stx + ((dx / ((fx - fp) / (stp - stx) + dx)) / 2.0) * (stp - stx);
        if (std::abs(stpc - stx) < std::abs(stpq - stx)) {
            stpf = stpc;
        } else {
            stpf = stpc + (stpq - stpc) / 2.0;
        }
        brackt = true;
    } else if (sgnd < 0.0) {
        // Derivatives of opposite sign: the minimum is bracketed.
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::abs(theta), std::abs(dx), std::abs(dp)});
        double gamma = s * std::sqrt((theta / s) * (theta / s) - (dx / s) * (dp / s));
        if (stp > stx) gamma = -gamma;
        const double p = (gamma - dp) + theta;
        const double q = ((gamma - dp) + gamma) + dx;
        const double r = p / q;
        const double stpc = stp + r * (stx - stp);
        const double stpq = stp + (dp / (dp - dx)) * (stx - stp);
        stpf = std::abs(stpc - stp) > std::abs(stpq - stp) ? stpc : stpq;
        brackt = true;
    } else if (std::abs(dp) < std::abs(dx)) {
        // Same sign, derivative magnitude decreasing.
        const double theta = 3.0 * (fx - fp) / (stp - stx) + dx + dp;
        const double s = std::max({std::abs(theta), std::abs(dx), std::abs(dp)});
        double gamma =
            s * std::sqrt(std::max(0.0, (theta / s) * (theta / s) - (dx / s) * (dp / s)));
        if (stp > stx) gamma = -gamma;
        const double p = (gamma - dp) + theta;
        const double q = (gamma + (dx - dp)) + gamma;
        const double r = p / q;
        double stpc = 0.0;
        if (r < 0.0 && gamma != 0.0) {
            stpc = stp + r * (stx - stp);
        } else if (stp > stx) {
            stpc = stpmax;
        } else {
            stpc = stpmin;
        }
        const double stpq = stp + (dp / (dp - dx)) * (stx - stp);
        if (brackt) {
            stpf = std::abs(stpc - stp) < std::abs(stpq - stp) ? stpc : stpq;
            if (stp > stx) {
                stpf = std::min(stp + 0.66 * (sty - stp), stpf);
            } else {
                stpf = std::max(stp + 0.66 * (sty - stp), stpf);
            }
        } else {
            stpf = std::abs(stpc - stp) > std::abs(stpq - stp) ? stpc : stpq;
            stpf = std::clamp(stpf, stpmin, stpmax);
        }
    } else {
        // Same sign, derivative magnitude not decreasing.
        if (brackt) {
            const double theta = 3.0 * (fp - fy) / (sty - stp) + dy + dp;
            const double s = std::max({std::abs(theta), std::abs(dy), std::abs(dp)});
            double gamma = s * std::sqrt((theta / s) * (theta / s) - (dy / s) * (dp / s));
            if (stp > sty) gamma = -gamma;
            const double p = (gamma - dp) + theta;
            const double q = ((gamma - dp) + gamma) + dy;
            const double r = p / q;
            stpf = stp + r * (sty - stp);
        } else if (stp > stx) {
            stpf = stpmax;
        } else {
            stpf = stpmin;
        }
    }

    if (fp > fx) {
        sty = stp;
        fy = fp;
        dy = dp;
    } else {
        if (sgnd < 0.0) {
            sty = stx;
            fy = fx;
            dy = dx;
        }
        stx = stp;
        fx = fp;
        dx = dp;
    }
    stp = stpf;
}

}  // namespace

double hs_beta(std::span<const double> g_new, std::span<const double> g_old,
               std::span<const double> d_old) {
    if (g_new.size() != g_old.size() || g_new.size() != d_old.size()) {
        throw ShapeError("hs_beta operands differ in length");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < g_new.size(); ++i) {
        const double y = g_new[i] - g_old[i];
        num += g_new[i] * y;
        den += d_old[i] * y;
    }
    if (std::abs(den) < 1e-30) return 0.0;
    return std::max(num / den, 0.0);
}

LineSearchResult line_search(const ObjectiveFn& fg, std::span<const double> x, double f,
                             std::span<const double> g, std::span<const double> d,
                             double initial_step, const OptimizeConfig& cfg) {
    constexpr double kXtol = 1e-14;
    constexpr double kStpMin = 0.0;
    constexpr double kStpMax = 1e20;
    constexpr double kXtrapLower = 1.1;
    constexpr double kXtrapUpper = 4.0;

    LineSearchResult out;
    const double ginit = dot(g, d);
    if (!(ginit < 0.0)) {
        throw ArgumentError("line search requires a descent direction");
    }
    const double gtest = cfg.wolfe_c1 * ginit;
    const double finit = f;

    bool brackt = false;
    int stage = 1;
    double width = kStpMax - kStpMin;
    double width1 = 2.0 * width;

    double stx = 0.0, fx = finit, gx = ginit;
    double sty = 0.0, fy = finit, gy = ginit;
    double stp = std::clamp(initial_step, kStpMin, kStpMax);
    double stmin = 0.0;
    double stmax = stp + kXtrapUpper * stp;

    std::vector<double> trial(x.size());
    while (out.evaluations < cfg.max_line_search_evals) {
        for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + stp * d[i];
        auto [fp, gp] = checked_eval(fg, trial);
        ++out.evaluations;
        const double dp = dot(gp, d);
        const double ftest = finit + stp * gtest;

        if (fp <= ftest && std::abs(dp) <= cfg.wolfe_c2 * (-ginit)) {
            out.converged = true;
            out.step = stp;
            out.f = fp;
            out.derivative = dp;
            out.x = std::move(trial);
            out.g = std::move(gp);
            return out;
        }
        if (stage == 1 && fp <= ftest && dp >= std::min(cfg.wolfe_c1, cfg.wolfe_c2) * ginit) {
            stage = 2;
        }
        // Rounding errors, interval collapse or a pinned step end the search.
        if (brackt && (stp <= stmin || stp >= stmax)) break;
        if (brackt && stmax - stmin <= kXtol * stmax) break;
        if (stp == kStpMax && fp <= ftest && dp <= gtest) break;
        if (stp == kStpMin && (fp > ftest || dp >= gtest)) break;

        if (stage == 1 && fp <= fx && fp > ftest) {
            // Work with the modified function ψ(α) = f(α) - f(0) - c1 α f'(0).
            double fm = fp - stp * gtest;
            double fxm = fx - stx * gtest;
            double fym = fy - sty * gtest;
            double gm = dp - gtest;
            double gxm = gx - gtest;
            double gym = gy - gtest;
            mt_step(stx, fxm, gxm, sty, fym, gym, stp, fm, gm, brackt, stmin, stmax);
            fx = fxm + stx * gtest;
            fy = fym + sty * gtest;
            gx = gxm + gtest;
            gy = gym + gtest;
        } else {
            mt_step(stx, fx, gx, sty, fy, gy, stp, fp, dp, brackt, stmin, stmax);
        }

        if (brackt) {
            if (std::abs(sty - stx) >= 0.66 * width1) stp = stx + 0.5 * (sty - stx);
            width1 = width;
            width = std::abs(sty - stx);
            stmin = std::min(stx, sty);
            stmax = std::max(stx, sty);
        } else {
            stmin = stp + kXtrapLower * (stp - stx);
            stmax = stp + kXtrapUpper * (stp - stx);
        }
        stp = std::clamp(stp, kStpMin, kStpMax);
        if (brackt && (stp <= stmin || stp >= stmax || stmax - stmin <= kXtol * stmax)) {
            stp = stx;
        }
    }
    return out;
}

OptimizeResult minimize(const ObjectiveFn& fg, std::vector<double> x0, const OptimizeConfig& cfg) {
    cfg.validate();
    OptimizeResult result;
    OptimizeReport& report = result.report;
    std::vector<double> x = std::move(x0);

    auto [f, g] = checked_eval(fg, x);
    report.evaluations = 1;
    report.initial_objective = f;
    double g_inf = inf_norm(g);
    report.initial_grad_norm = g_inf;

    const std::size_t restart_every = cfg.restart_every != 0 ? cfg.restart_every
                                                             : std::max<std::size_t>(x.size(), 1);
    auto converged = [&](double norm) { return norm == 0.0 || norm < cfg.grad_tol; };

    if (converged(g_inf)) {
        report.termination = Termination::GradTol;
        result.x = std::move(x);
        return result;
    }

    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
    std::size_t since_restart = 0;
    double prev_step = 0.0;
    double prev_gd = 0.0;
    report.termination = Termination::MaxIters;

    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        double gd = dot(g, d);
        bool steepest = since_restart == 0;
        if (!(gd < 0.0)) {
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
            gd = dot(g, d);
            since_restart = 0;
            steepest = true;
        }

        double alpha0 = cfg.initial_step;
        if (k == 0) {
            alpha0 = cfg.initial_step * std::min(1.0, 1.0 / g_inf);
        } else {
            const double guess = prev_step * prev_gd / gd;
            if (std::isfinite(guess) && guess > 0.0) alpha0 = guess;
        }

        LineSearchResult ls = line_search(fg, x, f, g, d, alpha0, cfg);
        report.evaluations += ls.evaluations;
        std::size_t evals = ls.evaluations;
        if (!ls.converged && !steepest) {
            // Retry once along steepest descent before giving up.
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
            gd = dot(g, d);
            since_restart = 0;
            ls = line_search(fg, x, f, g, d, cfg.initial_step * std::min(1.0, 1.0 / g_inf), cfg);
            report.evaluations += ls.evaluations;
            evals += ls.evaluations;
        }
        if (!ls.converged) {
            report.termination = Termination::LineSearchFailure;
            break;
        }

        prev_step = ls.step;
        prev_gd = gd;
        x = std::move(ls.x);
        std::vector<double> g_old = std::move(g);
        g = std::move(ls.g);
        f = ls.f;
        g_inf = inf_norm(g);
        report.trace.push_back({f, g_inf, ls.step, gd, ls.derivative, evals});

        if (converged(g_inf)) {
            report.termination = Termination::GradTol;
            break;
        }

        ++since_restart;
        double beta = 0.0;
        if (cfg.method == Method::NcgHs && since_restart < restart_every) {
            beta = hs_beta(g, g_old, d);
        }
        if (beta == 0.0) since_restart = 0;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i] + beta * d[i];
    }

    result.x = std::move(x);
    return result;
}

}  // namespace stto
