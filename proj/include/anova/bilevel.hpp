#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anova/features.hpp"
#include "anova/imaging.hpp"
#include "anova/kernel.hpp"
#include "anova/linops.hpp"
#include "json.hpp"

namespace anova {

struct BrentResult {
    double x = 0.0;
    double fx = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

// Brent's bracketed minimiser (golden section with parabolic steps). The
// interval of uncertainty shrinks to about max(tol, sqrt(eps)) |x| + tol.
inline BrentResult brent_minimize(const std::function<double(double)>& f, double a, double b, double tol,
                                  std::size_t maxit) {
    if (!(a < b)) throw std::invalid_argument("Brent needs a < b");
    if (!(tol > 0.0)) throw std::invalid_argument("Brent tolerance must be positive");
    const double golden = 0.5 * (3.0 - std::sqrt(5.0));
    const double rel = std::max(tol, std::sqrt(std::numeric_limits<double>::epsilon()));
    BrentResult res;
    double x = a + golden * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    res.evaluations = 1;
    double d = 0.0, e = 0.0;
    for (std::size_t it = 0; it < maxit; ++it) {
        const double m = 0.5 * (a + b);
        const double tol1 = rel * std::abs(x) + tol / 3.0;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
            res.converged = true;
            break;
        }
        res.iterations = it + 1;
        bool take_golden = true;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            r = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * r) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = m >= x ? tol1 : -tol1;
                take_golden = false;
            }
        }
        if (take_golden) {
            e = x >= m ? a - x : b - x;
            d = golden * e;
        }
        const double u = x + (std::abs(d) >= tol1 ? d : (d > 0 ? tol1 : -tol1));
        const double fu = f(u);
        ++res.evaluations;
        if (fu <= fx) {
            if (u >= x)
                a = x;
            else
                b = x;
            v = w, fv = fw;
            w = x, fw = fx;
            x = u, fx = fu;
        } else {
            if (u < x)
                a = u;
            else
                b = u;
            if (fu <= fw || w == x) {
                v = w, fv = fw;
                w = u, fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u, fv = fu;
            }
        }
    }
    if (!res.converged) {
        const double m = 0.5 * (a + b);
        res.converged = std::abs(x - m) <= 2.0 * (rel * std::abs(x) + tol / 3.0) - 0.5 * (b - a);
    }
    res.x = x;
    res.fx = fx;
    return res;
}

struct TrainingPair {
    std::string name;
    GrayImage clean;
    GrayImage noisy;
    std::shared_ptr<const AnovaOperator> kernel;
};

struct LowerLevelOptions {
    SolverKind solver = SolverKind::deflated_jacobi;
    double tol = 1e-10;
    std::size_t maxit = 25;
};

struct DenoiseResult {
    GrayImage image;
    SolveResult solve;
};

inline DenoiseResult denoise_with(const TrainingPair& pair, double lambda, double mu, const LowerLevelOptions& opt) {
    const ShiftedSystem sys(lambda, mu, pair.kernel);
    DenoiseResult out;
    out.solve = solve(sys, pair.noisy.pixels, opt.solver, opt.tol, opt.maxit);
    out.image = GrayImage(pair.noisy.height, pair.noisy.width);
    out.image.pixels = out.solve.u;
    return out;
}

// j(lambda) = (1/T) sum_t |u_clean,t - u_t(lambda)|^2.
inline double reduced_objective(double lambda, double mu, const std::vector<TrainingPair>& pairs,
                                const LowerLevelOptions& opt, std::vector<DenoiseResult>* results = nullptr) {
    if (pairs.empty()) throw std::invalid_argument("empty training set");
    std::vector<DenoiseResult> solved(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t t) { solved[t] = denoise_with(pairs[t], lambda, mu, opt); });
    double total = 0.0;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        const auto& u = solved[t].solve.u;
        const auto& c = pairs[t].clean.pixels;
        double err = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) err += (c[i] - u[i]) * (c[i] - u[i]);
        total += err;
    }
    if (results) *results = std::move(solved);
    return total / static_cast<double>(pairs.size());
}

struct TrainingOptions {
    double mu = 1e-2;
    double lambda_min = 1e-9;
    double lambda_max = 3.0;
    double tol = 1e-10;
    std::size_t maxit = 30;
    LowerLevelOptions lower;
};

struct ImageReport {
    std::string name;
    double ssim_noisy = 0.0;
    double ssim_denoised = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct TrainingReport {
    double lambda = 0.0;
    double objective = 0.0;
    // Brent's own minimiser, before comparison with the interval ends.
    double brent_lambda = 0.0;
    double brent_objective = 0.0;
    double objective_at_min = 0.0;
    double objective_at_max = 0.0;
    std::size_t brent_iterations = 0;
    std::size_t evaluations = 0;
    bool brent_converged = false;
    std::vector<ImageReport> images;
    double mean_ssim_noisy = 0.0;
    double mean_ssim_denoised = 0.0;
    double seconds = 0.0;
};

namespace detail {

inline void summarise(const std::vector<TrainingPair>& pairs, const std::vector<DenoiseResult>& solved,
                      std::vector<ImageReport>& images, double& mean_noisy, double& mean_denoised) {
    images.clear();
    mean_noisy = mean_denoised = 0.0;
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        ImageReport r;
        r.name = pairs[t].name;
        r.ssim_noisy = ssim(pairs[t].clean, pairs[t].noisy);
        r.ssim_denoised = ssim(pairs[t].clean, solved[t].image);
        r.iterations = solved[t].solve.iterations;
        r.converged = solved[t].solve.converged;
        mean_noisy += r.ssim_noisy / static_cast<double>(pairs.size());
        mean_denoised += r.ssim_denoised / static_cast<double>(pairs.size());
        images.push_back(r);
    }
}

}  // namespace detail

// Minimises the reduced objective over [lambda_min, lambda_max]. The interval
// ends are evaluated too and win if Brent's interior point is worse.
inline TrainingReport train(const std::vector<TrainingPair>& pairs, const TrainingOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    TrainingReport rep;
    auto j = [&](double lambda) { return reduced_objective(lambda, opt.mu, pairs, opt.lower); };
    const BrentResult br = brent_minimize(j, opt.lambda_min, opt.lambda_max, opt.tol, opt.maxit);
    rep.brent_iterations = br.iterations;
    rep.brent_converged = br.converged;
    rep.brent_lambda = rep.lambda = br.x;
    rep.brent_objective = rep.objective = br.fx;
    rep.objective_at_min = j(opt.lambda_min);
    rep.objective_at_max = j(opt.lambda_max);
    rep.evaluations = br.evaluations + 2;
    if (rep.objective_at_min < rep.objective) rep.lambda = opt.lambda_min, rep.objective = rep.objective_at_min;
    if (rep.objective_at_max < rep.objective) rep.lambda = opt.lambda_max, rep.objective = rep.objective_at_max;

    std::vector<DenoiseResult> solved;
    reduced_objective(rep.lambda, opt.mu, pairs, opt.lower, &solved);
    detail::summarise(pairs, solved, rep.images, rep.mean_ssim_noisy, rep.mean_ssim_denoised);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

struct ValidationReport {
    double lambda = 0.0;
    double objective = 0.0;
    std::vector<ImageReport> images;
    double mean_ssim_noisy = 0.0;
    double mean_ssim_denoised = 0.0;
    std::vector<DenoiseResult> results;
};

inline ValidationReport validate(double lambda, double mu, const std::vector<TrainingPair>& pairs,
                                 const LowerLevelOptions& lower) {
    ValidationReport rep;
    rep.lambda = lambda;
    rep.objective = reduced_objective(lambda, mu, pairs, lower, &rep.results);
    detail::summarise(pairs, rep.results, rep.images, rep.mean_ssim_noisy, rep.mean_ssim_denoised);
    return rep;
}

struct ManifestEntry {
    std::string name;
    std::string clean;
    std::string noisy;
};

// {"pairs": [{"name": ..., "clean": path, "noisy": path}, ...]}; relative
// paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ImageError(ImageErrorKind::open_failed, "cannot open manifest " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("manifest " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("pairs") || !doc["pairs"].is_array())
        throw std::invalid_argument("manifest needs a 'pairs' array");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<ManifestEntry> out;
    for (const auto& item : doc["pairs"]) {
        if (!item.is_object() || !item.contains("clean") || !item.contains("noisy"))
            throw std::invalid_argument("manifest entries need 'clean' and 'noisy'");
        ManifestEntry e;
        e.clean = (base / item["clean"].get<std::string>()).string();
        e.noisy = (base / item["noisy"].get<std::string>()).string();
        e.name = item.value("name", std::filesystem::path(e.noisy).stem().string());
        out.push_back(e);
    }
    if (out.empty()) throw std::invalid_argument("manifest lists no image pairs");
    return out;
}

inline nlohmann::json to_json(const ImageReport& r) {
    return {{"name", r.name},
            {"ssim_noisy", r.ssim_noisy},
            {"ssim_denoised", r.ssim_denoised},
            {"iterations", r.iterations},
            {"converged", r.converged}};
}

inline nlohmann::json to_json(const TrainingReport& r) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& im : r.images) images.push_back(to_json(im));
    return {{"lambda", r.lambda},
            {"objective", r.objective},
            {"brent_lambda", r.brent_lambda},
            {"brent_objective", r.brent_objective},
            {"objective_at_lambda_min", r.objective_at_min},
            {"objective_at_lambda_max", r.objective_at_max},
            {"brent_iterations", r.brent_iterations},
            {"objective_evaluations", r.evaluations},
            {"brent_converged", r.brent_converged},
            {"mean_ssim_noisy", r.mean_ssim_noisy},
            {"mean_ssim_denoised", r.mean_ssim_denoised},
            {"seconds", r.seconds},
            {"images", images}};
}

inline nlohmann::json to_json(const ValidationReport& r) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& im : r.images) images.push_back(to_json(im));
    return {{"lambda", r.lambda},
            {"objective", r.objective},
            {"mean_ssim_noisy", r.mean_ssim_noisy},
            {"mean_ssim_denoised", r.mean_ssim_denoised},
            {"images", images}};
}

inline void write_ssim_csv(std::ostream& out, const std::vector<ImageReport>& images) {
    out << "name,ssim_noisy,ssim_denoised\n";
    out.precision(10);
    for (const auto& r : images) out << r.name << ',' << r.ssim_noisy << ',' << r.ssim_denoised << '\n';
}

}  // namespace anova
