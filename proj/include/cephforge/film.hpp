// Film characteristic curves: sigmoid intensity transforms from line integrals
// to 8-bit cephalogram gray values, and least-squares fitting of the curve.
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cephforge/core.hpp"
#include "cephforge/projector.hpp"

namespace cephforge {

/// Parameters of g -> c1 + (255 - c1 - c2) * sigmoid(s * (g - t)).
struct SigmoidParams {
    double c1 = 40.0;  // film base + fog gray level
    double c2 = 5.0;   // saturation margin below 255
    double t = 2.6;    // integral shift
    double s = 1.5;    // slope

    void validate() const;
    friend bool operator==(const SigmoidParams&, const SigmoidParams&) = default;
};

/// Two-branch curve: air is zeroed below tau1, a gentler sigmoid covers
/// [tau1, tau2] and the base curve takes over above tau2.
struct ModifiedSigmoidParams {
    SigmoidParams base;
    double c3 = 18.0;
    /// Low-range span. When unset, derived so the two branches meet at tau2.
    std::optional<double> c4;
    double tau1 = 0.1;
    double tau2 = 1.2;

    void validate() const;
};

struct Cephalogram8 {
    Gray8 pixels;
    double su = 0.5;
    double sv = 0.5;
};

double sigmoid(double x);

/// Continuous value of the base curve.
double sigmoid_curve(double g, const SigmoidParams& p);

/// Low-range curve c3 + c4 * sigmoid(g - (tau1 + tau2)/2).
double low_range_curve(double g, double c3, double c4, double tau1, double tau2);

/// c4 such that the low-range curve equals the base curve at tau2.
/// Throws ValidationError when the base curve at tau2 lies below c3.
double derive_c4(const ModifiedSigmoidParams& p);

/// Continuous value of the modified curve (c4 resolved).
double modified_curve(double g, const ModifiedSigmoidParams& p);

Cephalogram8 sigmoid_transform(const IntegralImage& g, const SigmoidParams& p = {});
Cephalogram8 modified_sigmoid_transform(const IntegralImage& g, const ModifiedSigmoidParams& p = {});

struct CurveSample {
    double integral = 0.0;
    double gray = 0.0;
};

struct SigmoidFit {
    SigmoidParams params;
    double rms_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct FitOptions {
    std::optional<SigmoidParams> initial;  // default: derived from the samples
    int max_iterations = 200;
    double lambda0 = 1e-3;
    double relative_tolerance = 1e-10;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of SigmoidParams to samples.
/// Needs at least 4 samples. When the iteration cap is hit the best parameters
/// so far are returned with converged == false.
SigmoidFit fit_sigmoid(std::span<const CurveSample> samples, const FitOptions& opt = {});

/// key=value parameter files (c1, c2, t, s, and optionally c3, c4, tau1, tau2).
ModifiedSigmoidParams read_film_params(const std::filesystem::path& path);
void write_film_params(const std::filesystem::path& path, const ModifiedSigmoidParams& p);

void save_cephalogram(const std::filesystem::path& png_path, const Cephalogram8& c);
Cephalogram8 load_cephalogram(const std::filesystem::path& png_path);

}  // namespace cephforge
