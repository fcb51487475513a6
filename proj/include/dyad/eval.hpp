#pragma once

#include "dyad/linalg.hpp"
#include "dyad/twostep.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace dyad {

enum class Setting { single_task, multi_task, full_cold_start_pairwise, full_cold_start_two_step, almost_full_cold_start };

[[nodiscard]] const char* to_string(Setting setting);
[[nodiscard]] Setting parse_setting(const std::string& name);

/// Declarative description of one learning-curve experiment.
struct ExperimentPlan {
    Setting setting = Setting::almost_full_cold_start;
    // Labeled target objects per point (auxiliary objects for the full cold
    // start settings when auxiliary_size tracks the target).
    std::vector<std::size_t> target_sizes;
    // Auxiliary training objects; nullopt tracks the target size for
    // multi-task and full cold start, and means "whole training pool" for
    // almost full cold start.
    std::optional<std::size_t> auxiliary_size;
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    std::vector<double> grid;
    ErrorMetric metric_for_selection = ErrorMetric::mse;
    double test_fraction = 0.25;
    std::size_t max_target_tasks = 0; // 0 = every task takes a turn as target
    unsigned threads = 0;

    void validate() const;
};

/// Complete dyadic data: kernels over all objects and all tasks plus labels.
struct DyadicDataset {
    Matrix object_kernel; // N x N
    Matrix task_kernel;   // M x M
    Matrix labels;        // N x M

    void validate() const;
};

struct CurvePoint {
    std::size_t training_size = 0;
    double mean_c_index = 0.0;
    double std_error = 0.0;
};

struct LearningCurve {
    Setting setting = Setting::single_task;
    std::size_t repetitions = 0;
    std::vector<CurvePoint> points;
};

struct RawRecord {
    std::size_t training_size = 0;
    std::size_t repetition = 0;
    std::size_t target_task = 0;
    double c_index = 0.0;
};

struct ExperimentResult {
    LearningCurve curve;
    std::vector<RawRecord> raw;
};

/// Bilinear ground truth y(d, t) = phi(d)^T W psi(t).
struct BilinearTruth {
    Matrix coefficients; // object_dim x task_dim

    [[nodiscard]] double operator()(const Vector& object_features, const Vector& task_features) const {
        return object_features.dot(coefficients * task_features);
    }
};

struct SyntheticData {
    Matrix object_features; // n x object_dim
    Matrix task_features;   // m x task_dim
    Matrix labels;          // n x m, ground truth plus noise
    Matrix ground_truth;    // n x m
    BilinearTruth truth;

    /// Linear kernels over the features.
    [[nodiscard]] DyadicDataset to_dataset() const;
};

namespace eval {

/// Fraction of correctly ordered pairs among pairs with distinct labels;
/// prediction ties count one half.
[[nodiscard]] double c_index(std::span<const double> truth, std::span<const double> predicted);
[[nodiscard]] double c_index(const Vector& truth, const Vector& predicted);

[[nodiscard]] SyntheticData generate_synthetic(std::size_t n_objects, std::size_t m_tasks, std::size_t object_dim,
                                               std::size_t task_dim, double noise_sd, std::uint64_t seed);

/// Seed for repetition r, shared by every setting.
[[nodiscard]] std::uint64_t repetition_seed(std::uint64_t base, std::size_t repetition);

[[nodiscard]] ExperimentResult run_experiment(const ExperimentPlan& plan, const DyadicDataset& data);

void write_curve_csv(std::ostream& out, std::span<const LearningCurve> curves);
void write_raw_csv(std::ostream& out, Setting setting, std::span<const RawRecord> raw, bool header = true);
[[nodiscard]] std::string curves_to_json(std::span<const LearningCurve> curves);

} // namespace eval
} // namespace dyad
