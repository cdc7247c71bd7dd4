// Half-quadratic-splitting deblurring engine: conjugate-gradient
// deconvolution step, the level loop alternating deconvolution with a
// denoising prior under increasing beta, and the global-iteration wrapper.
#ifndef FLOWDEBLUR_HQS_HPP
#define FLOWDEBLUR_HQS_HPP

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "flowdeblur/blur.hpp"
#include "flowdeblur/flow_map.hpp"
#include "flowdeblur/image.hpp"

namespace flowdeblur {

struct HqsSchedule {
    std::vector<double> betas{0.01, 0.05, 0.25}; // strictly increasing, > 0
    double cg_tol = 1e-5;                        // relative residual
    int cg_max_iter = 200;
    int global_iterations = 3;

    int levels() const { return static_cast<int>(betas.size()); }
    void validate() const;

    // First `levels` terms of the default geometric ladder 0.01 * 5^k.
    static HqsSchedule with_levels(int levels);
};

// Solver of the denoising sub-problem. The observed blurry image rides
// along because learned priors use it to compensate heavily corrupted
// deconvolution results; classical priors are free to ignore it.
// The solve loop rounds every denoise() result to f32 interchange
// precision (the external wire format), so in-process and external
// implementations are bit-for-bit interchangeable.
class DenoiserPrior {
public:
    virtual ~DenoiserPrior() = default;
    // Called once before each solve (each global iteration is one solve).
    virtual void begin_solve() {}
    // level is 1-based.
    virtual Image denoise(const Image& deconvolved, const Image& observed,
                          int level) = 0;
};

struct CgResult {
    Image x;
    int iterations = 0;
    double residual = 0.0; // relative to |rhs|
    // Residual of the best iterate found so far, one entry per iteration;
    // non-increasing by construction since the solver returns that iterate.
    std::vector<double> residual_history;
};

using LinearOperator = std::function<Image(const Image&)>;

// Conjugate gradient on a symmetric positive definite operator, warm
// started at x0 = rhs. Stops when |apply(x)-rhs| <= tol*|rhs| or after
// max_iter iterations, returning the best iterate seen.
CgResult cg_solve(const LinearOperator& apply, const Image& rhs, double tol,
                  int max_iter);

struct SolveTrace {
    struct LevelRecord {
        int global_iteration = 1;
        int level = 1;
        double beta = 0.0;
        int cg_iterations = 0;
        double cg_residual = 0.0;
        std::vector<double> cg_residual_history;
        std::optional<double> psnr; // vs reference, when one was given
    };
    struct GlobalRecord {
        int global_iteration = 1;
        int levels_run = 0;
        int cg_iterations_total = 0;
        double final_cg_residual = 0.0;
        std::optional<double> psnr;
    };
    std::vector<LevelRecord> levels;
    std::vector<GlobalRecord> globals;

    // Tab-separated rows: kind, global, level, beta, cg_iters, residual,
    // psnr ("-" when absent). One "level" row per level, one "summary"
    // row per global iteration.
    void write_tsv(std::ostream& out) const;
};

// Deconvolution step: solves (K^T K + beta I) x = beta*anchor + K^T observed
// with CG at the schedule's tolerance. `detail`, when given, receives the
// CG iteration record.
Image x_step(const Image& anchor, const Image& observed,
             const FlowOperator& op, double beta, const HqsSchedule& schedule,
             CgResult* detail = nullptr);
Image x_step(const Image& anchor, const Image& observed,
             const MotionFlowMap& flow, double beta,
             const HqsSchedule& schedule,
             BoundaryPolicy boundary = BoundaryPolicy::replicate,
             CgResult* detail = nullptr);

// One full solve: Z starts at the observed image; each level runs the
// deconvolution step then the prior. Returns the last denoised image.
Image hqs_deblur(const Image& observed, const MotionFlowMap& flow,
                 DenoiserPrior& prior, const HqsSchedule& schedule,
                 BoundaryPolicy boundary, SolveTrace& trace,
                 const Image* reference = nullptr, int global_iteration = 1);
Image hqs_deblur(const Image& observed, const MotionFlowMap& flow,
                 DenoiserPrior& prior, const HqsSchedule& schedule,
                 BoundaryPolicy boundary = BoundaryPolicy::replicate);

// Maps an image to the flow to deconvolve it with; a stored-file oracle
// or an external estimator both fit.
using FlowProvider = std::function<MotionFlowMap(const Image&)>;

// Feeds the restored image back through flow estimation and the solver
// schedule.global_iterations times.
Image global_iterate(const Image& observed, const FlowProvider& flow_source,
                     DenoiserPrior& prior, const HqsSchedule& schedule,
                     BoundaryPolicy boundary, SolveTrace& trace,
                     const Image* reference = nullptr);

} // namespace flowdeblur

#endif
