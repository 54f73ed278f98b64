#include "cephforge/film.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cephforge/io.hpp"

namespace cephforge {

void SigmoidParams::validate() const {
    if (!(c1 >= 0.0) || !(c2 >= 0.0) || !(c1 + c2 < 255.0))
        throw ValidationError("sigmoid parameters need c1 >= 0, c2 >= 0 and c1 + c2 < 255");
    if (!(s > 0.0) || !std::isfinite(t)) throw ValidationError("sigmoid slope must be positive and shift finite");
}

void ModifiedSigmoidParams::validate() const {
    base.validate();
    if (!(tau1 >= 0.0 && tau1 < tau2)) throw ValidationError("thresholds need 0 <= tau1 < tau2");
    if (!(c3 >= 0.0)) throw ValidationError("c3 must be non-negative");
    if (c4 && !std::isfinite(*c4)) throw ValidationError("c4 must be finite");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double sigmoid_curve(double g, const SigmoidParams& p) {
    return p.c1 + (255.0 - p.c1 - p.c2) * sigmoid(p.s * (g - p.t));
}

double low_range_curve(double g, double c3, double c4, double tau1, double tau2) {
    return c3 + c4 * sigmoid(g - 0.5 * (tau1 + tau2));
}

double derive_c4(const ModifiedSigmoidParams& p) {
    p.base.validate();
    const double at_tau2 = sigmoid_curve(p.tau2, p.base);
    if (at_tau2 < p.c3)
        throw ValidationError("base curve at tau2 (" + std::to_string(at_tau2) + ") is below c3; c4 would be negative");
    return (at_tau2 - p.c3) * (1.0 + std::exp(-(p.tau2 - 0.5 * (p.tau1 + p.tau2))));
}

double modified_curve(double g, const ModifiedSigmoidParams& p) {
    if (g < p.tau1) return 0.0;
    if (g <= p.tau2) return low_range_curve(g, p.c3, p.c4 ? *p.c4 : derive_c4(p), p.tau1, p.tau2);
    return sigmoid_curve(g, p.base);
}

Cephalogram8 sigmoid_transform(const IntegralImage& g, const SigmoidParams& p) {
    p.validate();
    Cephalogram8 out{Gray8(g.nu(), g.nv()), g.su, g.sv};
    for (std::size_t i = 0; i < g.values.size(); ++i)
        out.pixels.values()[i] = to_u8(sigmoid_curve(g.values.values()[i], p));
    return out;
}

Cephalogram8 modified_sigmoid_transform(const IntegralImage& g, const ModifiedSigmoidParams& p) {
    p.validate();
    ModifiedSigmoidParams resolved = p;
    if (!resolved.c4) resolved.c4 = derive_c4(p);
    Cephalogram8 out{Gray8(g.nu(), g.nv()), g.su, g.sv};
    for (std::size_t i = 0; i < g.values.size(); ++i)
        out.pixels.values()[i] = to_u8(modified_curve(g.values.values()[i], resolved));
    return out;
}

namespace {

using Vec4 = Eigen::Vector4d;

SigmoidParams from_vec(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

double cost_of(std::span<const CurveSample> samples, const Vec4& th) {
    const SigmoidParams p = from_vec(th);
    double c = 0.0;
    for (const auto& smp : samples) {
        const double r = sigmoid_curve(smp.integral, p) - smp.gray;
        c += r * r;
    }
    return c;
}

SigmoidParams initial_guess(std::span<const CurveSample> samples) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<double> xs;
    for (const auto& s : samples) {
        lo = std::min(lo, s.gray);
        hi = std::max(hi, s.gray);
        xs.push_back(s.integral);
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    const double median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    return {lo, 255.0 - hi, median, 1.0};
}

}  // namespace

SigmoidFit fit_sigmoid(std::span<const CurveSample> samples, const FitOptions& opt) {
    if (samples.size() < 4) throw ValidationError("sigmoid fitting needs at least 4 samples");
    for (const auto& s : samples) {
        if (!(s.integral >= 0.0) || !std::isfinite(s.integral))
            throw ValidationError("sample integrals must be finite and non-negative");
        if (!(s.gray >= 0.0 && s.gray <= 255.0)) throw ValidationError("sample grays must lie in [0, 255]");
    }

    const SigmoidParams init = opt.initial ? *opt.initial : initial_guess(samples);
    Vec4 theta(init.c1, init.c2, init.t, init.s);
    double cost = cost_of(samples, theta);
    double lambda = opt.lambda0;
    SigmoidFit fit;

    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        fit.iterations = iter;
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Vec4 jtr = Vec4::Zero();
        const SigmoidParams p = from_vec(theta);
        const double span = 255.0 - p.c1 - p.c2;
        for (const auto& smp : samples) {
            const double sg = sigmoid(p.s * (smp.integral - p.t));
            const double ds = span * sg * (1.0 - sg);
            const Vec4 jac(1.0 - sg, -sg, -p.s * ds, (smp.integral - p.t) * ds);
            const double r = p.c1 + span * sg - smp.gray;
            jtj += jac * jac.transpose();
            jtr += jac * r;
        }

        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::Matrix4d damped = jtj;
            for (int i = 0; i < 4; ++i) damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const Vec4 step = damped.ldlt().solve(-jtr);
            const Vec4 trial = theta + step;
            const double trial_cost = step.allFinite() ? cost_of(samples, trial) : std::numeric_limits<double>::infinity();
            if (trial_cost < cost) {
                const double rel = (cost - trial_cost) / std::max(cost, std::numeric_limits<double>::min());
                theta = trial;
                cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (rel < opt.relative_tolerance) fit.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        // No descent direction left: we sit at a minimum to working precision.
        if (!accepted || cost == 0.0) fit.converged = true;
        if (fit.converged) break;
    }

    fit.params = from_vec(theta);
    fit.rms_residual = std::sqrt(cost / double(samples.size()));
    return fit;
}

ModifiedSigmoidParams read_film_params(const std::filesystem::path& path) {
    const auto kv = io::read_key_values(path);
    ModifiedSigmoidParams p;
    const auto num = [&](const char* key, double& slot) {
        if (kv.contains(key)) slot = io::parse_doubles(kv.at(key), 1)[0];
    };
    num("c1", p.base.c1);
    num("c2", p.base.c2);
    num("t", p.base.t);
    num("s", p.base.s);
    num("c3", p.c3);
    num("tau1", p.tau1);
    num("tau2", p.tau2);
    if (kv.contains("c4") && kv.at("c4") != "derived") p.c4 = io::parse_doubles(kv.at("c4"), 1)[0];
    p.validate();
    return p;
}

void write_film_params(const std::filesystem::path& path, const ModifiedSigmoidParams& p) {
    const auto one = [](double x) { return io::format_doubles(std::span<const double>(&x, 1)); };
    io::write_key_values(path, {{"c1", one(p.base.c1)},
                                {"c2", one(p.base.c2)},
                                {"t", one(p.base.t)},
                                {"s", one(p.base.s)},
                                {"c3", one(p.c3)},
                                {"c4", p.c4 ? one(*p.c4) : "derived"},
                                {"tau1", one(p.tau1)},
                                {"tau2", one(p.tau2)}});
}

void save_cephalogram(const std::filesystem::path& png_path, const Cephalogram8& c) {
    io::write_png_gray(png_path, c.pixels);
    const double dims[2] = {double(c.pixels.nu()), double(c.pixels.nv())};
    const double sp[2] = {c.su, c.sv};
    io::write_key_values(io::meta_path_for(png_path),
                         {{"dims", io::format_doubles(dims)}, {"spacing_mm", io::format_doubles(sp)}, {"dtype", "png8"}});
}

Cephalogram8 load_cephalogram(const std::filesystem::path& png_path) {
    Cephalogram8 c{io::read_png_gray(png_path), 0.5, 0.5};
    const auto meta = io::meta_path_for(png_path);
    if (std::filesystem::exists(meta)) {
        const auto kv = io::read_key_values(meta);
        if (kv.contains("spacing_mm")) {
            const auto sp = io::parse_doubles(kv.at("spacing_mm"), 2);
            c.su = sp[0];
            c.sv = sp[1];
        }
    }
    return c;
}

}  // namespace cephforge
