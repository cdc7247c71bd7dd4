// flowdeblur: command-line front end for synthetic-blur dataset generation,
// blurring, non-blind/blind deblurring and metric evaluation.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flowdeblur/blur.hpp"
#include "flowdeblur/flow_io.hpp"
#include "flowdeblur/hqs.hpp"
#include "flowdeblur/image_io.hpp"
#include "flowdeblur/metrics.hpp"
#include "flowdeblur/priors.hpp"
#include "flowdeblur/subprocess.hpp"
#include "flowdeblur/synth.hpp"

namespace fdb = flowdeblur;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fdb::BoundaryPolicy parse_boundary(const std::string& name) {
    if (name == "replicate") return fdb::BoundaryPolicy::replicate;
    if (name == "zero") return fdb::BoundaryPolicy::zero;
    throw UsageError("unknown boundary mode: " + name);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Expands "--config FILE" into "--key=value" tokens inserted right after
// the subcommand name. Keys already given on the command line are skipped,
// so explicit flags override the file.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string value;
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
            value = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            value = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
        } else {
            continue;
        }
        if (!config_path.empty()) throw UsageError("--config given more than once");
        config_path = value;
        --i;
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot read config file: " + config_path);

    std::vector<std::string> explicit_flags;
    for (const std::string& a : args)
        if (a.rfind("--", 0) == 0) explicit_flags.push_back(a.substr(0, a.find('=')));

    std::size_t insert_at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i)
        if (args[i].rfind("-", 0) != 0) {
            insert_at = i + 1; // right after the subcommand
            break;
        }

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos || eq == 0)
            throw UsageError("config line " + std::to_string(line_no) +
                             " is not key=value: " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        const std::string flag = "--" + key;
        if (std::find(explicit_flags.begin(), explicit_flags.end(), flag) !=
            explicit_flags.end())
            continue;
        args.insert(args.begin() + static_cast<long>(insert_at), flag + "=" + value);
        ++insert_at;
    }
    return args;
}

std::string format_metric(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string sharp_dir;
    std::string out_dir;
    int per_image = 20;
    double ceiling = 23.0;
    double smoothness = 8.0;
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;
};

int run_generate(const GenerateArgs& args) {
    fdb::FlowGenParams params;
    params.ceiling = args.ceiling;
    params.smoothness = args.smoothness;
    params.noise_sigma = args.noise_sigma;
    params.seed = args.seed;
    const fdb::DatasetManifest manifest =
        fdb::build_dataset(args.sharp_dir, args.out_dir, args.per_image, params);
    std::cerr << "generated " << manifest.rows.size() << " pairs\n";
    std::cout << manifest.manifest_path.string() << "\n";
    return 0;
}

// -------------------------------------------------------------------- blur

struct BlurArgs {
    std::string input;
    std::string flow;
    std::string output;
    std::string boundary = "replicate";
    int bits = 16;
};

int run_blur(const BlurArgs& args) {
    const fdb::Image sharp = fdb::read_image(args.input);
    const fdb::MotionFlowMap flow = fdb::read_flow(args.flow);
    const fdb::Image blurred =
        fdb::forward_blur(sharp, flow, parse_boundary(args.boundary));
    fdb::write_image(blurred, args.output, args.bits);
    std::cout << args.output << "\n";
    return 0;
}

// ------------------------------------------------------------------ deblur

struct DeblurArgs {
    std::string input;
    std::string flow_file;
    std::string flow_cmd;
    double flow_cmd_timeout = 60.0;
    std::string output;
    std::string prior = "tv";
    std::vector<double> betas;
    int levels = 3;
    std::vector<double> tv_weights;
    int tv_iters = 50;
    double tv_step = 0.248;
    std::string denoiser_cmd;
    double denoiser_timeout = 30.0;
    int global_iters = 1;
    double cg_tol = 1e-5;
    int cg_max_iter = 200;
    std::string boundary = "replicate";
    int bits = 16;
    std::string trace_path;
    std::string reference;
};

std::vector<double> default_tv_weights(int levels) {
    std::vector<double> w;
    double v = 0.08;
    for (int i = 0; i < levels; ++i, v *= 0.5) w.push_back(v);
    return w;
}

fdb::MotionFlowMap flow_from_command(const std::string& command, double timeout_s,
                                     const fdb::Image& img) {
    fdb::Subprocess child(fdb::split_command(command));
    const auto timeout =
        std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    const std::vector<std::uint8_t> png = fdb::encode_png(img, 16);
    child.write_exact(png.data(), png.size(), timeout);
    child.close_stdin();
    const std::vector<std::uint8_t> reply = child.read_all(timeout);
    const int status = child.wait();
    if (status != 0)
        throw fdb::IoError("flow command exited with status " +
                           std::to_string(status));
    return fdb::decode_flow(reply);
}

int run_deblur(const DeblurArgs& args) {
    if (args.flow_file.empty() == args.flow_cmd.empty())
        throw UsageError("deblur needs exactly one of --flow or --flow-cmd");
    if (args.prior == "external" && args.denoiser_cmd.empty())
        throw UsageError("--prior external requires --denoiser-cmd");

    fdb::HqsSchedule schedule =
        args.betas.empty() ? fdb::HqsSchedule::with_levels(args.levels)
                           : fdb::HqsSchedule{};
    if (!args.betas.empty()) schedule.betas = args.betas;
    schedule.cg_tol = args.cg_tol;
    schedule.cg_max_iter = args.cg_max_iter;
    schedule.global_iterations = args.global_iters;
    schedule.validate();

    std::unique_ptr<fdb::DenoiserPrior> prior;
    if (args.prior == "identity") {
        prior = std::make_unique<fdb::IdentityPrior>();
    } else if (args.prior == "tv") {
        fdb::TvParams params;
        params.weights = args.tv_weights.empty()
                             ? default_tv_weights(schedule.levels())
                             : args.tv_weights;
        params.inner_iters = args.tv_iters;
        params.step = args.tv_step;
        prior = std::make_unique<fdb::TvPrior>(params);
    } else if (args.prior == "external") {
        fdb::ExternalDenoiserConfig cfg;
        cfg.command = args.denoiser_cmd;
        cfg.timeout_seconds = args.denoiser_timeout;
        prior = std::make_unique<fdb::ExternalDenoiser>(cfg);
    } else {
        throw UsageError("unknown prior: " + args.prior);
    }

    const fdb::Image observed = fdb::read_image(args.input);
    std::optional<fdb::Image> reference;
    if (!args.reference.empty()) reference = fdb::read_image(args.reference);

    fdb::FlowProvider provider;
    if (!args.flow_file.empty()) {
        // Oracle mode: the stored flow is reused for every global iteration.
        const fdb::MotionFlowMap stored = fdb::read_flow(args.flow_file);
        provider = [stored](const fdb::Image&) { return stored; };
        if (args.global_iters > 1)
            std::cerr << "note: the stored flow describes the original blur and is "
                         "reused on every pass; residual-blur passes expect a "
                         "re-estimating --flow-cmd\n";
    } else {
        provider = [&args](const fdb::Image& img) {
            return flow_from_command(args.flow_cmd, args.flow_cmd_timeout, img);
        };
    }

    fdb::SolveTrace trace;
    int rc = 0;
    try {
        const fdb::Image restored = fdb::global_iterate(
            observed, provider, *prior, schedule, parse_boundary(args.boundary),
            trace, reference ? &*reference : nullptr);
        fdb::write_image(restored, args.output, args.bits);
        std::cout << args.output << "\n";
    } catch (const std::exception& e) {
        std::cerr << "deblur failed: " << e.what() << "\n";
        rc = 1;
    }
    if (!args.trace_path.empty()) {
        std::ofstream out(args.trace_path, std::ios::trunc);
        if (out) {
            trace.write_tsv(out);
        } else {
            std::cerr << "cannot write trace to " << args.trace_path << "\n";
            rc = 1;
        }
    }
    return rc;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
    std::string manifest;
    std::vector<std::string> image_pairs; // flat, 2 entries per pair
    std::vector<std::string> flow_pairs;
};

int run_eval(const EvalArgs& args) {
    std::vector<std::pair<std::string, std::string>> images;
    std::vector<std::pair<std::string, std::string>> flows;

    for (std::size_t i = 0; i + 1 < args.image_pairs.size(); i += 2)
        images.emplace_back(args.image_pairs[i], args.image_pairs[i + 1]);
    for (std::size_t i = 0; i + 1 < args.flow_pairs.size(); i += 2)
        flows.emplace_back(args.flow_pairs[i], args.flow_pairs[i + 1]);

    if (!args.manifest.empty()) {
        std::ifstream in(args.manifest);
        if (!in) {
            std::cerr << "missing file: " << args.manifest << "\n";
            return 1;
        }
        const fs::path base = fs::path(args.manifest).parent_path();
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string sharp, blurred, flow;
            std::getline(row, sharp, '\t');
            std::getline(row, blurred, '\t');
            std::getline(row, flow, '\t');
            images.emplace_back((base / blurred).string(), sharp);
        }
    }

    if (images.empty() && flows.empty())
        throw UsageError("eval needs --manifest, --image-pair or --flow-pair");

    std::vector<std::string> missing;
    auto check = [&missing](const std::string& p) {
        if (!fs::exists(p)) missing.push_back(p);
    };
    for (const auto& [a, b] : images) { check(a); check(b); }
    for (const auto& [a, b] : flows) { check(a); check(b); }
    if (!missing.empty()) {
        for (const std::string& p : missing) std::cerr << "missing file: " << p << "\n";
        return 1;
    }

    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& [a, b] : images) {
        const fdb::Image ia = fdb::read_image(a);
        const fdb::Image ib = fdb::read_image(b);
        const double p = fdb::psnr(ia, ib);
        const double s = fdb::ssim(ia, ib);
        psnr_sum += p;
        ssim_sum += s;
        std::cout << "image\t" << a << '\t' << b << '\t' << format_metric(p, 4)
                  << '\t' << format_metric(s, 6) << "\n";
    }
    if (!images.empty())
        std::cout << "image_mean\t-\t-\t"
                  << format_metric(psnr_sum / images.size(), 4) << '\t'
                  << format_metric(ssim_sum / images.size(), 6) << "\n";

    double mse_sum = 0.0;
    for (const auto& [a, b] : flows) {
        const double m = fdb::flow_mse(fdb::read_flow(a), fdb::read_flow(b));
        mse_sum += m;
        std::cout << "flow\t" << a << '\t' << b << '\t' << format_metric(m, 9)
                  << "\n";
    }
    if (!flows.empty())
        std::cout << "flow_mean\t-\t-\t" << format_metric(mse_sum / flows.size(), 9)
                  << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatially-varying motion deblurring toolkit"};
    app.require_subcommand(1);

    std::string config_stub;
    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand(
        "generate", "Build a synthetic blurred/sharp dataset with flow labels");
    generate->add_option("--config", config_stub,
                         "Plain key=value defaults file; explicit flags win");
    generate->add_option("--sharp-dir", gen.sharp_dir, "Directory of sharp PNGs")
        ->required()->check(CLI::ExistingDirectory);
    generate->add_option("--out", gen.out_dir, "Output directory")->required();
    generate->add_option("--per-image", gen.per_image, "Blurred images per sharp image")
        ->check(CLI::PositiveNumber);
    generate->add_option("--ceiling", gen.ceiling, "Max |u|,|v| motion in pixels")
        ->check(CLI::NonNegativeNumber);
    generate->add_option("--smoothness", gen.smoothness,
                         "Flow correlation length in pixels");
    generate->add_option("--noise-sigma", gen.noise_sigma, "Additive Gaussian sigma")
        ->check(CLI::NonNegativeNumber);
    generate->add_option("--seed", gen.seed, "RNG seed");

    BlurArgs blur;
    CLI::App* blur_cmd =
        app.add_subcommand("blur", "Apply a motion-flow blur to an image");
    blur_cmd->add_option("--config", config_stub,
                         "Plain key=value defaults file; explicit flags win");
    blur_cmd->add_option("--input", blur.input, "Sharp PNG")->required()
        ->check(CLI::ExistingFile);
    blur_cmd->add_option("--flow", blur.flow, "Motion flow file")->required()
        ->check(CLI::ExistingFile);
    blur_cmd->add_option("--output", blur.output, "Blurred PNG")->required();
    blur_cmd->add_option("--boundary", blur.boundary, "replicate|zero");
    blur_cmd->add_option("--bits", blur.bits, "Output bit depth")
        ->check(CLI::IsMember({8, 16}));

    DeblurArgs deblur;
    CLI::App* deblur_cmd = app.add_subcommand(
        "deblur", "Restore a blurred image given its motion flow (file or estimator)");
    deblur_cmd->add_option("--config", config_stub,
                         "Plain key=value defaults file; explicit flags win");
    deblur_cmd->add_option("--input", deblur.input, "Blurred PNG")->required()
        ->check(CLI::ExistingFile);
    deblur_cmd->add_option("--flow", deblur.flow_file, "Oracle motion flow file")
        ->check(CLI::ExistingFile);
    deblur_cmd->add_option("--flow-cmd", deblur.flow_cmd,
                           "Estimator command: PNG on stdin, flow file on stdout");
    deblur_cmd->add_option("--flow-cmd-timeout", deblur.flow_cmd_timeout,
                           "Seconds allowed per flow estimate")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--output", deblur.output, "Restored PNG")->required();
    deblur_cmd->add_option("--prior", deblur.prior, "identity|tv|external");
    deblur_cmd->add_option("--betas", deblur.betas,
                           "Comma-separated level weights, strictly increasing")
        ->delimiter(',');
    deblur_cmd->add_option("--levels", deblur.levels,
                           "Level count for the default beta ladder")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--tv-weights", deblur.tv_weights,
                           "Comma-separated TV weights per level")
        ->delimiter(',');
    deblur_cmd->add_option("--tv-iters", deblur.tv_iters, "TV dual-ascent iterations")
        ->check(CLI::NonNegativeNumber);
    deblur_cmd->add_option("--tv-step", deblur.tv_step, "TV dual step size");
    deblur_cmd->add_option("--denoiser-cmd", deblur.denoiser_cmd,
                           "External denoiser command (framed stdin/stdout protocol)");
    deblur_cmd->add_option("--denoiser-timeout", deblur.denoiser_timeout,
                           "Seconds allowed per denoiser reply")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--global-iters", deblur.global_iters,
                           "Full passes through flow estimation and the solver; "
                           "passes past the first expect a re-estimating --flow-cmd")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--cg-tol", deblur.cg_tol, "CG relative residual tolerance")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--cg-max-iter", deblur.cg_max_iter, "CG iteration cap")
        ->check(CLI::PositiveNumber);
    deblur_cmd->add_option("--boundary", deblur.boundary, "replicate|zero");
    deblur_cmd->add_option("--bits", deblur.bits, "Output bit depth")
        ->check(CLI::IsMember({8, 16}));
    deblur_cmd->add_option("--trace", deblur.trace_path, "Write solve trace TSV here");
    deblur_cmd->add_option("--reference", deblur.reference,
                           "Sharp reference, adds PSNR to the trace")
        ->check(CLI::ExistingFile);

    EvalArgs eval;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Report PSNR/SSIM (and flow MSE) as TSV rows");
    eval_cmd->add_option("--config", config_stub,
                         "Plain key=value defaults file; explicit flags win");
    eval_cmd->add_option("--manifest", eval.manifest,
                         "Dataset manifest; evaluates blurred vs sharp");
    eval_cmd->add_option("--image-pair", eval.image_pairs,
                         "Image pair to compare (two paths)")
        ->expected(2)->take_all();
    eval_cmd->add_option("--flow-pair", eval.flow_pairs,
                         "Flow pair to compare (two paths)")
        ->expected(2)->take_all();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config(args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) return run_generate(gen);
        if (blur_cmd->parsed()) return run_blur(blur);
        if (deblur_cmd->parsed()) return run_deblur(deblur);
        if (eval_cmd->parsed()) return run_eval(eval);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const fdb::ParameterError& e) {
        // invalid option values caught by semantic validation
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
