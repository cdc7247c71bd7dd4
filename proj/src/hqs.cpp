#include "flowdeblur/hqs.hpp"

#include <cmath>
#include <utility>

#include "flowdeblur/metrics.hpp"

namespace flowdeblur {

void HqsSchedule::validate() const {
    if (betas.empty()) throw ParameterError("HqsSchedule: betas must be non-empty");
    double prev = 0.0;
    for (double b : betas) {
        if (!(b > prev) || !std::isfinite(b))
            throw ParameterError("HqsSchedule: betas must be strictly increasing and > 0");
        prev = b;
    }
    if (!(cg_tol > 0.0)) throw ParameterError("HqsSchedule: cg_tol must be > 0");
    if (cg_max_iter < 1) throw ParameterError("HqsSchedule: cg_max_iter must be >= 1");
    if (global_iterations < 1)
        throw ParameterError("HqsSchedule: global_iterations must be >= 1");
}

HqsSchedule HqsSchedule::with_levels(int levels) {
    if (levels < 1) throw ParameterError("HqsSchedule: levels must be >= 1");
    HqsSchedule s;
    s.betas.clear();
    double b = 0.01;
    for (int i = 0; i < levels; ++i, b *= 5.0) s.betas.push_back(b);
    return s;
}

CgResult cg_solve(const LinearOperator& apply, const Image& rhs, double tol,
                  int max_iter) {
    if (!(tol > 0.0)) throw ParameterError("cg_solve: tol must be > 0");
    if (max_iter < 0) throw ParameterError("cg_solve: max_iter must be >= 0");

    CgResult result;
    const double rhs_norm = norm2(rhs);
    if (rhs_norm == 0.0) {
        result.x = Image(rhs.width, rhs.height, rhs.channels, 0.0);
        return result;
    }

    // Warm start at the right-hand side.
    Image x = rhs;
    Image ax = apply(x);
    require_same_shape(ax, rhs, "cg_solve: operator output");
    Image r = rhs;
    for (std::size_t i = 0; i < r.data.size(); ++i)
        r.data[i] = rhs.data[i] - ax.data[i];

    double rr = dot(r, r);
    if (!std::isfinite(rr))
        throw NumericalError(
            "cg_solve: non-finite residual at iteration 0 (warm start)");
    double best_rel = std::sqrt(rr) / rhs_norm;
    Image best_x = x;

    if (best_rel > tol) {
        Image p = r;
        for (int iter = 1; iter <= max_iter; ++iter) {
            Image ap = apply(p);
            const double p_ap = dot(p, ap);
            if (!std::isfinite(p_ap))
                throw NumericalError("cg_solve: non-finite curvature at iteration " +
                                     std::to_string(iter) + " (residual " +
                                     std::to_string(best_rel) + ")");
            if (p_ap <= 0.0) break; // operator not positive definite on p
            const double alpha = rr / p_ap;
            for (std::size_t i = 0; i < x.data.size(); ++i) {
                x.data[i] += alpha * p.data[i];
                r.data[i] -= alpha * ap.data[i];
            }
            const double rr_next = dot(r, r);
            if (!std::isfinite(rr_next))
                throw NumericalError("cg_solve: non-finite residual at iteration " +
                                     std::to_string(iter) + " (residual " +
                                     std::to_string(best_rel) + ")");
            const double rel = std::sqrt(rr_next) / rhs_norm;
            if (rel < best_rel) {
                best_rel = rel;
                best_x = x;
            }
            result.iterations = iter;
            result.residual_history.push_back(best_rel);
            if (best_rel <= tol) break;
            const double beta = rr_next / rr;
            rr = rr_next;
            for (std::size_t i = 0; i < p.data.size(); ++i)
                p.data[i] = r.data[i] + beta * p.data[i];
        }
    }

    result.x = std::move(best_x);
    result.residual = best_rel;
    return result;
}

Image x_step(const Image& anchor, const Image& observed,
             const FlowOperator& op, double beta, const HqsSchedule& schedule,
             CgResult* detail) {
    require_same_shape(anchor, observed, "x_step");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ParameterError("x_step: beta must be > 0");

    Image rhs = op.adjoint(observed);
    for (std::size_t i = 0; i < rhs.data.size(); ++i)
        rhs.data[i] += beta * anchor.data[i];

    const LinearOperator apply = [&op, beta](const Image& img) {
        return op.normal(img, beta);
    };
    CgResult cg = cg_solve(apply, rhs, schedule.cg_tol, schedule.cg_max_iter);
    Image x = std::move(cg.x);
    if (detail) {
        detail->iterations = cg.iterations;
        detail->residual = cg.residual;
        detail->residual_history = std::move(cg.residual_history);
    }
    return x;
}

Image x_step(const Image& anchor, const Image& observed,
             const MotionFlowMap& flow, double beta, const HqsSchedule& schedule,
             BoundaryPolicy boundary, CgResult* detail) {
    return x_step(anchor, observed, FlowOperator(flow, boundary), beta, schedule,
                  detail);
}

Image hqs_deblur(const Image& observed, const MotionFlowMap& flow,
                 DenoiserPrior& prior, const HqsSchedule& schedule,
                 BoundaryPolicy boundary, SolveTrace& trace,
                 const Image* reference, int global_iteration) {
    schedule.validate();
    if (reference) require_same_shape(*reference, observed, "hqs_deblur reference");
    const FlowOperator op(flow, boundary);

    prior.begin_solve();
    Image denoised = observed; // auxiliary variable starts at the observation
    int cg_total = 0;
    double last_residual = 0.0;
    for (int level = 1; level <= schedule.levels(); ++level) {
        const double beta = schedule.betas[static_cast<std::size_t>(level - 1)];
        CgResult detail;
        Image deconvolved = x_step(denoised, observed, op, beta, schedule, &detail);
        denoised = prior.denoise(deconvolved, observed, level);
        require_same_shape(denoised, observed, "hqs_deblur: prior output");
        // Prior outputs are normalized to f32 interchange precision, the
        // external wire format, so in-process and external denoisers are
        // bit-for-bit interchangeable.
        for (double& v : denoised.data) v = static_cast<float>(v);
        if (!all_finite(denoised))
            throw NumericalError("hqs_deblur: prior produced non-finite samples at level " +
                                 std::to_string(level));

        SolveTrace::LevelRecord rec;
        rec.global_iteration = global_iteration;
        rec.level = level;
        rec.beta = beta;
        rec.cg_iterations = detail.iterations;
        rec.cg_residual = detail.residual;
        rec.cg_residual_history = std::move(detail.residual_history);
        if (reference) rec.psnr = psnr(denoised, *reference);
        cg_total += rec.cg_iterations;
        last_residual = rec.cg_residual;
        trace.levels.push_back(std::move(rec));
    }

    SolveTrace::GlobalRecord summary;
    summary.global_iteration = global_iteration;
    summary.levels_run = schedule.levels();
    summary.cg_iterations_total = cg_total;
    summary.final_cg_residual = last_residual;
    if (reference) summary.psnr = psnr(denoised, *reference);
    trace.globals.push_back(summary);
    return denoised;
}

Image hqs_deblur(const Image& observed, const MotionFlowMap& flow,
                 DenoiserPrior& prior, const HqsSchedule& schedule,
                 BoundaryPolicy boundary) {
    SolveTrace trace;
    return hqs_deblur(observed, flow, prior, schedule, boundary, trace);
}

Image global_iterate(const Image& observed, const FlowProvider& flow_source,
                     DenoiserPrior& prior, const HqsSchedule& schedule,
                     BoundaryPolicy boundary, SolveTrace& trace,
                     const Image* reference) {
    schedule.validate();
    Image result = observed;
    for (int t = 1; t <= schedule.global_iterations; ++t) {
        const MotionFlowMap flow = flow_source(result);
        result = hqs_deblur(result, flow, prior, schedule, boundary, trace,
                            reference, t);
    }
    return result;
}

void SolveTrace::write_tsv(std::ostream& out) const {
    out << "kind\tglobal\tlevel\tbeta\tcg_iters\tcg_residual\tpsnr\n";
    auto write_psnr = [&out](const std::optional<double>& p) {
        if (p) out << *p;
        else out << '-';
        out << '\n';
    };
    std::size_t next_level = 0;
    for (const GlobalRecord& g : globals) {
        while (next_level < levels.size() &&
               levels[next_level].global_iteration == g.global_iteration) {
            const LevelRecord& r = levels[next_level++];
            out << "level\t" << r.global_iteration << '\t' << r.level << '\t'
                << r.beta << '\t' << r.cg_iterations << '\t' << r.cg_residual
                << '\t';
            write_psnr(r.psnr);
        }
        out << "summary\t" << g.global_iteration << '\t' << g.levels_run << '\t'
            << "-\t" << g.cg_iterations_total << '\t' << g.final_cg_residual
            << '\t';
        write_psnr(g.psnr);
    }
    // Orphan level rows (failed solve flushed mid-way) still get written.
    for (; next_level < levels.size(); ++next_level) {
        const LevelRecord& r = levels[next_level];
        out << "level\t" << r.global_iteration << '\t' << r.level << '\t'
            << r.beta << '\t' << r.cg_iterations << '\t' << r.cg_residual << '\t';
        write_psnr(r.psnr);
    }
}

} // namespace flowdeblur
