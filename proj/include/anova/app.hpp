#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anova/bilevel.hpp"
#include "anova/features.hpp"
#include "anova/imaging.hpp"
#include "anova/kernel.hpp"
#include "anova/linops.hpp"
#include "anova/spectral.hpp"
#include "json.hpp"

namespace anova::app {

enum ExitCode : int { ok = 0, config_error = 2, io_error = 3, not_converged = 4 };

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command = "denoise";
    std::string input;
    std::string reference;
    std::string output;
    std::string manifest;
    std::string report;
    std::string csv;

    std::size_t patch_radius = 1;
    int mis_bins = 16;
    double sigma = 40.0;
    double lambda = 0.1;
    double mu = 1e-2;
    std::string kernel_mode = "fast";
    std::string preconditioner = "deflated-jacobi";
    double tol = 1e-8;
    std::size_t maxit = 100;
    double noise_stddev = 0.0;
    std::uint64_t seed = 0;

    double lambda_min = 1e-9;
    double lambda_max = 3.0;
    double brent_tol = 1e-10;
    std::size_t brent_maxit = 30;
    double lower_tol = 1e-10;
    std::size_t lower_maxit = 25;

    std::vector<std::size_t> sizes;
    std::vector<double> sigmas;
    std::vector<double> lambdas;
    std::size_t repeats = 3;
    std::size_t dense_limit = default_dense_limit;

    double kernel_tolerance = 1e-7;
    std::size_t min_expansion = 16;
    std::size_t nfft_cutoff = 4;
    double oversampling = 2.0;
    std::string nfft_window = "kaiser-bessel";

    bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"denoise",  "train",       "validate",       "spectra",
                                               "bench-op", "bench-solve", "iteration-table"};
    return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
    return {{"command", c.command},
            {"input", c.input},
            {"reference", c.reference},
            {"output", c.output},
            {"manifest", c.manifest},
            {"report", c.report},
            {"csv", c.csv},
            {"patch_radius", c.patch_radius},
            {"mis_bins", c.mis_bins},
            {"sigma", c.sigma},
            {"lambda", c.lambda},
            {"mu", c.mu},
            {"kernel_mode", c.kernel_mode},
            {"preconditioner", c.preconditioner},
            {"tol", c.tol},
            {"maxit", c.maxit},
            {"noise_stddev", c.noise_stddev},
            {"seed", c.seed},
            {"lambda_min", c.lambda_min},
            {"lambda_max", c.lambda_max},
            {"brent_tol", c.brent_tol},
            {"brent_maxit", c.brent_maxit},
            {"lower_tol", c.lower_tol},
            {"lower_maxit", c.lower_maxit},
            {"sizes", c.sizes},
            {"sigmas", c.sigmas},
            {"lambdas", c.lambdas},
            {"repeats", c.repeats},
            {"dense_limit", c.dense_limit},
            {"kernel_tolerance", c.kernel_tolerance},
            {"min_expansion", c.min_expansion},
            {"nfft_cutoff", c.nfft_cutoff},
            {"oversampling", c.oversampling},
            {"nfft_window", c.nfft_window}};
}

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline void validate_config(const RunConfig& c) {
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
        throw ConfigError("unknown command '" + c.command + "'");
    if (c.kernel_mode != "fast" && c.kernel_mode != "exact") throw ConfigError("kernel_mode must be fast or exact");
    try {
        parse_solver_kind(c.preconditioner);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (c.nfft_window != "kaiser-bessel" && c.nfft_window != "gaussian")
        throw ConfigError("nfft_window must be kaiser-bessel or gaussian");
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(c.sigma, "sigma");
    positive(c.lambda, "lambda");
    positive(c.mu, "mu");
    positive(c.tol, "tol");
    positive(c.brent_tol, "brent_tol");
    positive(c.lower_tol, "lower_tol");
    positive(c.lambda_min, "lambda_min");
    positive(c.kernel_tolerance, "kernel_tolerance");
    if (!(c.lambda_max > c.lambda_min)) throw ConfigError("lambda_max must exceed lambda_min");
    if (!(c.noise_stddev >= 0.0)) throw ConfigError("noise_stddev must be non-negative");
    if (!(c.oversampling >= 1.25)) throw ConfigError("oversampling must be at least 1.25");
    if (c.nfft_cutoff == 0) throw ConfigError("nfft_cutoff must be positive");
    if (c.mis_bins < 2) throw ConfigError("mis_bins must be at least 2");
    if (c.repeats == 0) throw ConfigError("repeats must be positive");
    for (double s : c.sigmas) positive(s, "sigmas entries");
    for (double l : c.lambdas) positive(l, "lambdas entries");
}

// Unknown keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig c = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const nlohmann::json known = to_json(RunConfig{});
    for (const auto& item : j.items())
        if (!known.contains(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
    detail::read_field(j, "command", c.command);
    detail::read_field(j, "input", c.input);
    detail::read_field(j, "reference", c.reference);
    detail::read_field(j, "output", c.output);
    detail::read_field(j, "manifest", c.manifest);
    detail::read_field(j, "report", c.report);
    detail::read_field(j, "csv", c.csv);
    detail::read_field(j, "patch_radius", c.patch_radius);
    detail::read_field(j, "mis_bins", c.mis_bins);
    detail::read_field(j, "sigma", c.sigma);
    detail::read_field(j, "lambda", c.lambda);
    detail::read_field(j, "mu", c.mu);
    detail::read_field(j, "kernel_mode", c.kernel_mode);
    detail::read_field(j, "preconditioner", c.preconditioner);
    detail::read_field(j, "tol", c.tol);
    detail::read_field(j, "maxit", c.maxit);
    detail::read_field(j, "noise_stddev", c.noise_stddev);
    detail::read_field(j, "seed", c.seed);
    detail::read_field(j, "lambda_min", c.lambda_min);
    detail::read_field(j, "lambda_max", c.lambda_max);
    detail::read_field(j, "brent_tol", c.brent_tol);
    detail::read_field(j, "brent_maxit", c.brent_maxit);
    detail::read_field(j, "lower_tol", c.lower_tol);
    detail::read_field(j, "lower_maxit", c.lower_maxit);
    detail::read_field(j, "sizes", c.sizes);
    detail::read_field(j, "sigmas", c.sigmas);
    detail::read_field(j, "lambdas", c.lambdas);
    detail::read_field(j, "repeats", c.repeats);
    detail::read_field(j, "dense_limit", c.dense_limit);
    detail::read_field(j, "kernel_tolerance", c.kernel_tolerance);
    detail::read_field(j, "min_expansion", c.min_expansion);
    detail::read_field(j, "nfft_cutoff", c.nfft_cutoff);
    detail::read_field(j, "oversampling", c.oversampling);
    detail::read_field(j, "nfft_window", c.nfft_window);
    validate_config(c);
    return c;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

inline KernelOptions kernel_options(const RunConfig& c) {
    KernelOptions k;
    k.mode = c.kernel_mode == "exact" ? KernelMode::exact : KernelMode::fast;
    k.dense_limit = c.dense_limit;
    k.fastsum.kernel_tolerance = c.kernel_tolerance;
    k.fastsum.min_expansion = c.min_expansion;
    k.fastsum.cutoff = c.nfft_cutoff;
    k.fastsum.oversampling = c.oversampling;
    k.fastsum.window = c.nfft_window == "gaussian" ? WindowKind::gaussian : WindowKind::kaiser_bessel;
    return k;
}

inline std::shared_ptr<AnovaOperator> build_operator(const GrayImage& img, const RunConfig& c) {
    return build_anova_operator(windows_from_image(img, c.patch_radius, c.sigma, c.mis_bins), kernel_options(c));
}

inline void require(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(std::string("config key '") + key + "' is required for this command");
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ImageError(ImageErrorKind::write_failed, "cannot write " + path);
    return out;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline int run_denoise(const RunConfig& c, std::ostream& log) {
    require(c.input, "input");
    require(c.output, "output");
    GrayImage img = load_image(c.input);
    if (c.noise_stddev > 0.0) img = add_gaussian_noise(img, {c.noise_stddev, c.seed});
    const auto op = build_operator(img, c);
    const ShiftedSystem sys(c.lambda, c.mu, op);
    const SolveResult res = solve(sys, img.pixels, parse_solver_kind(c.preconditioner), c.tol, c.maxit);
    GrayImage out(img.height, img.width);
    out.pixels = res.u;
    save_image(out, c.output);
    nlohmann::json summary = {{"n", img.size()},
                              {"iterations", res.iterations},
                              {"relative_residual", res.relative_residual},
                              {"converged", res.converged},
                              {"ssim_input", ssim(img, out)}};
    if (!c.reference.empty()) {
        const GrayImage clean = load_image(c.reference);
        if (clean.height != img.height || clean.width != img.width)
            throw ConfigError("reference image shape differs from the input");
        summary["ssim_reference_noisy"] = ssim(clean, img);
        summary["ssim_reference_denoised"] = ssim(clean, out);
    }
    log << summary.dump() << '\n';
    return res.converged ? ok : not_converged;
}

inline std::vector<TrainingPair> load_pairs(const RunConfig& c) {
    require(c.manifest, "manifest");
    std::vector<TrainingPair> pairs;
    for (const auto& e : load_manifest(c.manifest)) {
        TrainingPair p;
        p.name = e.name;
        p.clean = load_image(e.clean);
        p.noisy = load_image(e.noisy);
        if (p.clean.height != p.noisy.height || p.clean.width != p.noisy.width)
            throw ConfigError("clean and noisy images differ in shape for " + e.name);
        pairs.push_back(std::move(p));
    }
    std::vector<std::shared_ptr<const AnovaOperator>> ops(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t t) { ops[t] = build_operator(pairs[t].noisy, c); });
    for (std::size_t t = 0; t < pairs.size(); ++t) pairs[t].kernel = ops[t];
    return pairs;
}

inline LowerLevelOptions lower_options(const RunConfig& c) {
    return {parse_solver_kind(c.preconditioner), c.lower_tol, c.lower_maxit};
}

inline void write_reports(const RunConfig& c, const nlohmann::json& report, const std::vector<ImageReport>& images,
                          std::ostream& log) {
    if (!c.report.empty()) open_output(c.report) << report.dump(2) << '\n';
    if (!c.csv.empty()) {
        std::ofstream out = open_output(c.csv);
        write_ssim_csv(out, images);
    }
    log << report.dump() << '\n';
}

inline int run_train(const RunConfig& c, std::ostream& log) {
    const auto pairs = load_pairs(c);
    TrainingOptions opt;
    opt.mu = c.mu;
    opt.lambda_min = c.lambda_min;
    opt.lambda_max = c.lambda_max;
    opt.tol = c.brent_tol;
    opt.maxit = c.brent_maxit;
    opt.lower = lower_options(c);
    const TrainingReport rep = train(pairs, opt);
    write_reports(c, to_json(rep), rep.images, log);
    return rep.brent_converged ? ok : not_converged;
}

inline int run_validate(const RunConfig& c, std::ostream& log) {
    const auto pairs = load_pairs(c);
    const ValidationReport rep = validate(c.lambda, c.mu, pairs, lower_options(c));
    if (!c.output.empty()) {
        std::filesystem::create_directories(c.output);
        for (std::size_t t = 0; t < pairs.size(); ++t)
            save_image(rep.results[t].image,
                       (std::filesystem::path(c.output) / (pairs[t].name + "_denoised.pgm")).string());
    }
    write_reports(c, to_json(rep), rep.images, log);
    return ok;
}

inline int run_spectra(const RunConfig& c, std::ostream& log) {
    require(c.input, "input");
    require(c.csv, "csv");
    GrayImage img = load_image(c.input);
    if (c.noise_stddev > 0.0) img = add_gaussian_noise(img, {c.noise_stddev, c.seed});
    const auto features = std::make_shared<const FeatureMatrix>(extract_patches(img, c.patch_radius));
    const std::vector<double> sigmas = c.sigmas.empty() ? std::vector<double>{c.sigma} : c.sigmas;
    const std::vector<double> lambdas = c.lambdas.empty() ? std::vector<double>{c.lambda} : c.lambdas;
    std::ofstream out = open_output(c.csv);
    bool header = true;
    for (double sigma : sigmas) {
        const DenseKernel k = assemble_dense(split_windows(features, sigma, 3, c.mis_bins), c.dense_limit);
        for (double lambda : lambdas) {
            write_spectrum_csv(out, spectrum_rows(k, lambda, c.mu), header);
            header = false;
            const BoundsReport rep = bounds_report(k, lambda, c.mu);
            log << nlohmann::json{{"sigma", sigma},
                                  {"lambda", lambda},
                                  {"bounds_hold", rep.all_hold()},
                                  {"working_range", rep.in_working_range()},
                                  {"condition_estimate", condition_estimate(lambda, c.mu, rep.eta_max)}}
                       .dump()
                << '\n';
        }
    }
    return ok;
}

inline GrayImage rescaled(const GrayImage& img, std::size_t n) {
    const double aspect = static_cast<double>(img.width) / static_cast<double>(img.height);
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(n / aspect))));
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(n) / h)));
    return resize_bilinear(img, h, w);
}

inline int run_bench(const RunConfig& c, std::ostream& log, bool with_solve) {
    require(c.input, "input");
    GrayImage base = load_image(c.input);
    const std::vector<std::size_t> sizes = c.sizes.empty() ? std::vector<std::size_t>{base.size()} : c.sizes;
    std::ofstream file;
    if (!c.csv.empty()) file = open_output(c.csv);
    std::ostream& out = c.csv.empty() ? log : file;
    out << "n,setup_ms,apply_ms,total_ms,iters,residual\n";
    bool all_converged = true;
    for (std::size_t n : sizes) {
        GrayImage img = rescaled(base, n);
        if (c.noise_stddev > 0.0) img = add_gaussian_noise(img, {c.noise_stddev, c.seed});
        if (c.kernel_mode == "exact" && img.size() > c.dense_limit) {
            out << img.size() << ",NA,NA,NA,NA,NA\n";
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        const auto op = build_operator(img, c);
        op->degree();
        const double setup = elapsed_ms(start);
        const auto t1 = std::chrono::steady_clock::now();
        if (with_solve) {
            const ShiftedSystem sys(c.lambda, c.mu, op);
            const SolveResult res = solve(sys, img.pixels, parse_solver_kind(c.preconditioner), c.tol, c.maxit);
            const double run = elapsed_ms(t1);
            all_converged = all_converged && res.converged;
            out << img.size() << ',' << setup << ',' << run << ',' << setup + run << ',' << res.iterations << ','
                << res.relative_residual << '\n';
        } else {
            for (std::size_t r = 0; r < c.repeats; ++r) op->apply(img.pixels);
            const double apply = elapsed_ms(t1) / static_cast<double>(c.repeats);
            out << img.size() << ',' << setup << ',' << apply << ',' << setup + apply << ",0,NA\n";
        }
    }
    return all_converged ? ok : not_converged;
}

// CG iteration counts of every preconditioner over a list of lambdas.
inline int run_iteration_table(const RunConfig& c, std::ostream& log) {
    require(c.input, "input");
    GrayImage img = load_image(c.input);
    if (c.noise_stddev > 0.0) img = add_gaussian_noise(img, {c.noise_stddev, c.seed});
    const auto op = build_operator(img, c);
    const std::vector<double> lambdas = c.lambdas.empty() ? std::vector<double>{c.lambda} : c.lambdas;
    std::ofstream file;
    if (!c.csv.empty()) file = open_output(c.csv);
    std::ostream& out = c.csv.empty() ? log : file;
    out << "lambda,preconditioner,iterations,converged,relative_residual\n";
    for (double lambda : lambdas) {
        const ShiftedSystem sys(lambda, c.mu, op);
        for (SolverKind k : all_solver_kinds()) {
            const SolveResult res = solve(sys, img.pixels, k, c.tol, c.maxit);
            out << lambda << ',' << to_string(k) << ',' << res.iterations << ',' << (res.converged ? 1 : 0) << ','
                << res.relative_residual << '\n';
        }
    }
    return ok;
}

// Maps failures to exit codes.
inline int run(const RunConfig& c, std::ostream& log, std::ostream& err) {
    try {
        validate_config(c);
        if (c.command == "denoise") return run_denoise(c, log);
        if (c.command == "train") return run_train(c, log);
        if (c.command == "validate") return run_validate(c, log);
        if (c.command == "spectra") return run_spectra(c, log);
        if (c.command == "bench-op") return run_bench(c, log, false);
        if (c.command == "bench-solve") return run_bench(c, log, true);
        if (c.command == "iteration-table") return run_iteration_table(c, log);
        throw ConfigError("unknown command '" + c.command + "'");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const ImageError& e) {
        err << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const DenseLimitExceeded& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::ios_base::failure& e) {
        err << "I/O error: " << e.what() << '\n';
        return io_error;
    }
}

}  // namespace anova::app
