#include "dyad/eval.hpp"

#include "dyad/dataio.hpp"
#include "dyad/error.hpp"
#include "dyad/pairwise.hpp"
#include "dyad/parallel.hpp"
#include "dyad/ridge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>

namespace dyad {

const char* to_string(Setting setting) {
    switch (setting) {
    case Setting::single_task: return "single_task";
    case Setting::multi_task: return "multi_task";
    case Setting::full_cold_start_pairwise: return "full_cold_start_pairwise";
    case Setting::full_cold_start_two_step: return "full_cold_start_two_step";
    case Setting::almost_full_cold_start: return "almost_full_cold_start";
    }
    return "unknown";
}

Setting parse_setting(const std::string& name) {
    for (Setting s : {Setting::single_task, Setting::multi_task, Setting::full_cold_start_pairwise,
                      Setting::full_cold_start_two_step, Setting::almost_full_cold_start}) {
        if (name == to_string(s)) return s;
    }
    throw InvalidParameter("unknown experiment setting '" + name + "'");
}

void ExperimentPlan::validate() const {
    if (repetitions < 1) throw InvalidPlan("experiment plan: repetitions must be at least 1");
    if (target_sizes.empty()) throw InvalidPlan("experiment plan: no target sizes");
    if (grid.empty()) throw InvalidPlan("experiment plan: empty regularization grid");
    for (double v : grid)
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidPlan("experiment plan: grid values must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidPlan("experiment plan: test_fraction must be in (0, 1)");
    if (setting == Setting::multi_task && auxiliary_size)
        throw InvalidPlan("experiment plan: multi_task shares its objects with the target; auxiliary_size must track it");
}

void DyadicDataset::validate() const {
    const Index n = labels.rows();
    const Index m = labels.cols();
    if (n < 3 || m < 1) throw InvalidPlan("dataset: need at least 3 objects and 1 task");
    if (object_kernel.rows() != n || object_kernel.cols() != n)
        throw InvalidInput("dataset: object kernel does not match the label rows");
    if (task_kernel.rows() != m || task_kernel.cols() != m)
        throw InvalidInput("dataset: task kernel does not match the label columns");
    if (!labels.allFinite()) throw InvalidInput("dataset: labels must be complete");
}

DyadicDataset SyntheticData::to_dataset() const {
    return {object_features * object_features.transpose(), task_features * task_features.transpose(), labels};
}

namespace eval {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Indices = std::vector<Index>;

Matrix select(const Matrix& m, const Indices& rows, const Indices& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

Indices permutation(std::size_t n, std::uint64_t seed) {
    Indices perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    return perm;
}

// Objects and tasks of one (size, repetition, target task) job.
struct Split {
    Indices test;
    Indices training; // first `labeled` entries also carry target labels
    std::size_t labeled = 0;
    Indices aux_tasks;
    Index target = 0;
};

double select_ridge_lambda(const EigenSystem& es, const Vector& y, const std::vector<double>& grid, ErrorMetric metric) {
    std::optional<double> best;
    double best_error = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const Matrix duals = linalg::shifted_inverse_apply(es, lambda, y);
        const auto loo = ridge::loo_predictions(duals, y, ridge::loo_diagonal(es, lambda), Axis::rows);
        double e = 0.0;
        try {
            e = twostep::selection_error(metric, loo.predictions, y, Axis::columns);
        } catch (const UndefinedMetric&) {
            e = twostep::selection_error(ErrorMetric::mse, loo.predictions, y, Axis::columns);
        }
        if (e < best_error) {
            best_error = e;
            best = lambda;
        }
    }
    return best.value_or(grid.front());
}

double select_pairwise_lambda(const EigenSystem& objects, const EigenSystem& tasks, const Matrix& y,
                              const std::vector<double>& grid, ErrorMetric metric) {
    std::optional<double> best;
    double best_error = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        const Matrix loo = pairwise::loo_tikhonov(objects, tasks, y, lambda);
        double e = 0.0;
        try {
            e = twostep::selection_error(metric, loo, y, Axis::columns);
        } catch (const UndefinedMetric&) {
            e = twostep::selection_error(ErrorMetric::mse, loo, y, Axis::columns);
        }
        if (e < best_error) {
            best_error = e;
            best = lambda;
        }
    }
    return best.value_or(grid.front());
}

Vector predict_job(const ExperimentPlan& plan, const std::vector<double>& grid, const DyadicDataset& data,
                   const Split& split) {
    const Matrix& K = data.object_kernel;
    const Matrix& G = data.task_kernel;
    const Matrix& Y = data.labels;
    const Indices target{split.target};

    if (plan.setting == Setting::single_task) {
        const Indices objs(split.training.begin(), split.training.begin() + static_cast<long>(split.labeled));
        const EigenSystem es = linalg::psd_eigen(select(K, objs, objs));
        const Vector y = select(Y, objs, target);
        const double lambda = select_ridge_lambda(es, y, grid, plan.metric_for_selection);
        const Vector a = linalg::shifted_inverse_apply(es, lambda, y);
        return select(K, split.test, objs) * a;
    }

    if (plan.setting == Setting::multi_task) {
        Indices tasks = split.aux_tasks;
        tasks.push_back(split.target);
        const EigenSystem objects = linalg::psd_eigen(select(K, split.training, split.training));
        const EigenSystem task_es = linalg::psd_eigen(select(G, tasks, tasks));
        const Matrix y = select(Y, split.training, tasks);
        const double lambda = select_pairwise_lambda(objects, task_es, y, grid, plan.metric_for_selection);
        const PairwiseModel model = pairwise::fit_pairwise_tikhonov(objects, task_es, y, lambda);
        return pairwise::predict_pairs(model, select(K, split.test, split.training), select(G, target, tasks));
    }

    ColdStartProblem problem;
    problem.object_eigen = linalg::psd_eigen(select(K, split.training, split.training));
    problem.task_eigen = linalg::psd_eigen(select(G, split.aux_tasks, split.aux_tasks));
    problem.labels = select(Y, split.training, split.aux_tasks);
    problem.target_task_kernel = select(G, split.aux_tasks, target);
    problem.labeled_mask.assign(split.training.size(), false);
    problem.labeled_values.resize(static_cast<Index>(split.labeled));
    for (std::size_t i = 0; i < split.labeled; ++i) {
        problem.labeled_mask[i] = true;
        problem.labeled_values(static_cast<Index>(i)) = Y(split.training[i], split.target);
    }
    SelectionOptions options;
    options.metric = plan.metric_for_selection;
    options.threads = 1;
    const Matrix test_rows = select(K, split.test, split.training);

    if (plan.setting == Setting::full_cold_start_pairwise) {
        const SelectionReport report = twostep::select_lambdas(problem.object_eigen, problem.task_eigen,
                                                               problem.labels, grid, grid, options);
        const double lambda = report.chosen_lambda_t * report.chosen_lambda_d;
        const PairwiseModel model =
            pairwise::fit_pairwise_tikhonov(problem.object_eigen, problem.task_eigen, problem.labels, lambda);
        return pairwise::predict_pairs(model, test_rows, problem.target_task_kernel.transpose());
    }
    const auto [model, report] = twostep::select_and_fit(problem, grid, options);
    return twostep::predict_target(model, test_rows);
}

} // namespace

double c_index(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw InvalidInput("c_index: length mismatch");
    if (truth.size() < 2) throw UndefinedMetric("c_index: need at least two labels");
    double concordant = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (!(truth[i] > truth[j])) continue;
            ++pairs;
            if (predicted[i] > predicted[j])
                concordant += 1.0;
            else if (predicted[i] == predicted[j])
                concordant += 0.5;
        }
    }
    if (pairs == 0) throw UndefinedMetric("c_index: all true labels are equal");
    return concordant / static_cast<double>(pairs);
}

double c_index(const Vector& truth, const Vector& predicted) {
    return c_index(std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())),
                   std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())));
}

SyntheticData generate_synthetic(std::size_t n_objects, std::size_t m_tasks, std::size_t object_dim,
                                 std::size_t task_dim, double noise_sd, std::uint64_t seed) {
    if (n_objects < 1 || m_tasks < 1 || object_dim < 1 || task_dim < 1)
        throw InvalidParameter("generate_synthetic: sizes and dimensions must be at least 1");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
        throw InvalidParameter("generate_synthetic: noise_sd must be nonnegative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](Matrix& m, double scale) {
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) m(i, j) = scale * normal(rng);
    };

    const auto n = static_cast<Index>(n_objects);
    const auto m = static_cast<Index>(m_tasks);
    SyntheticData data;
    data.object_features.resize(n, static_cast<Index>(object_dim));
    data.task_features.resize(m, static_cast<Index>(task_dim));
    data.truth.coefficients.resize(static_cast<Index>(object_dim), static_cast<Index>(task_dim));
    fill(data.object_features, 1.0);
    fill(data.task_features, 1.0);
    // Unit expected label variance.
    fill(data.truth.coefficients, 1.0 / std::sqrt(static_cast<double>(object_dim * task_dim)));

    data.ground_truth = data.object_features * data.truth.coefficients * data.task_features.transpose();
    data.labels = data.ground_truth;
    if (noise_sd > 0.0) {
        Matrix noise(n, m);
        fill(noise, noise_sd);
        data.labels += noise;
    }
    return data;
}

std::uint64_t repetition_seed(std::uint64_t base, std::size_t repetition) {
    return splitmix64(base + static_cast<std::uint64_t>(repetition));
}

ExperimentResult run_experiment(const ExperimentPlan& plan, const DyadicDataset& data) {
    plan.validate();
    data.validate();

    const auto n_objects = static_cast<std::size_t>(data.labels.rows());
    const auto n_tasks = static_cast<std::size_t>(data.labels.cols());
    const std::size_t n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(plan.test_fraction * static_cast<double>(n_objects))), 2,
        n_objects - 1);
    const std::size_t pool = n_objects - n_test;
    const std::size_t n_targets = plan.max_target_tasks > 0 ? std::min(plan.max_target_tasks, n_tasks) : n_tasks;
    const bool uses_aux = plan.setting != Setting::single_task;
    if (uses_aux && n_tasks < 2) throw InvalidPlan("experiment: this setting needs at least one auxiliary task");

    // (training objects, labeled target objects) per curve point.
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for (std::size_t s : plan.target_sizes) {
        std::size_t train = s;
        std::size_t labeled = s;
        switch (plan.setting) {
        case Setting::single_task:
        case Setting::multi_task:
            if (s < 1) throw InvalidPlan("experiment: target size must be at least 1 for " + std::string(to_string(plan.setting)));
            break;
        case Setting::full_cold_start_pairwise:
        case Setting::full_cold_start_two_step:
            train = plan.auxiliary_size.value_or(s);
            labeled = 0;
            break;
        case Setting::almost_full_cold_start:
            train = plan.auxiliary_size.value_or(pool);
            if (s > train) throw InvalidPlan("experiment: target size exceeds the auxiliary training objects");
            break;
        }
        if (train < 1) throw InvalidPlan("experiment: no training objects for size " + std::to_string(s));
        if (train > pool)
            throw InvalidPlan("experiment: size " + std::to_string(train) + " exceeds the " + std::to_string(pool) +
                              " objects available for training");
        shapes.emplace_back(train, labeled);
    }

    std::vector<Indices> perms;
    perms.reserve(plan.repetitions);
    for (std::size_t r = 0; r < plan.repetitions; ++r) perms.push_back(permutation(n_objects, repetition_seed(plan.seed, r)));

    std::vector<double> grid = plan.grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const std::size_t per_size = plan.repetitions * n_targets;
    const std::size_t jobs = shapes.size() * per_size;
    std::vector<std::optional<double>> scores(jobs);
    parallel_for(jobs, plan.threads, [&](std::size_t job) {
        const std::size_t size_idx = job / per_size;
        const std::size_t rep = (job % per_size) / n_targets;
        const std::size_t task = job % n_targets;
        const Indices& perm = perms[rep];

        Split split;
        split.test.assign(perm.begin(), perm.begin() + static_cast<long>(n_test));
        split.training.assign(perm.begin() + static_cast<long>(n_test),
                              perm.begin() + static_cast<long>(n_test + shapes[size_idx].first));
        split.labeled = shapes[size_idx].second;
        split.target = static_cast<Index>(task);
        for (std::size_t t = 0; t < n_tasks; ++t)
            if (t != task) split.aux_tasks.push_back(static_cast<Index>(t));

        const Vector predicted = predict_job(plan, grid, data, split);
        const Vector truth = select(data.labels, split.test, Indices{split.target});
        if ((truth.array() == truth(0)).all()) return;
        scores[job] = c_index(truth, predicted);
    });

    ExperimentResult result;
    result.curve.setting = plan.setting;
    result.curve.repetitions = plan.repetitions;
    for (std::size_t size_idx = 0; size_idx < shapes.size(); ++size_idx) {
        std::vector<double> task_means;
        for (std::size_t task = 0; task < n_targets; ++task) {
            CompensatedSum sum;
            std::size_t count = 0;
            for (std::size_t rep = 0; rep < plan.repetitions; ++rep) {
                const std::size_t job = size_idx * per_size + rep * n_targets + task;
                if (!scores[job]) continue;
                sum.add(*scores[job]);
                ++count;
                result.raw.push_back({plan.target_sizes[size_idx], rep, task, *scores[job]});
            }
            if (count > 0) task_means.push_back(sum.value() / static_cast<double>(count));
        }
        if (task_means.empty()) throw UndefinedMetric("experiment: C-index undefined for every target task");

        CompensatedSum total;
        for (double v : task_means) total.add(v);
        const double mean = total.value() / static_cast<double>(task_means.size());
        double std_error = 0.0;
        if (task_means.size() > 1) {
            CompensatedSum sq;
            for (double v : task_means) sq.add((v - mean) * (v - mean));
            const double var = sq.value() / static_cast<double>(task_means.size() - 1);
            std_error = std::sqrt(var / static_cast<double>(task_means.size()));
        }
        result.curve.points.push_back({plan.target_sizes[size_idx], mean, std_error});
    }
    std::stable_sort(result.curve.points.begin(), result.curve.points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.training_size < b.training_size; });
    return result;
}

void write_curve_csv(std::ostream& out, std::span<const LearningCurve> curves) {
    out << "setting,size,mean_c_index,std_error,repetitions\n";
    for (const auto& curve : curves) {
        for (const auto& p : curve.points) {
            out << to_string(curve.setting) << ',' << p.training_size << ',' << dataio::format_double(p.mean_c_index)
                << ',' << dataio::format_double(p.std_error) << ',' << curve.repetitions << '\n';
        }
    }
}

void write_raw_csv(std::ostream& out, Setting setting, std::span<const RawRecord> raw, bool header) {
    if (header) out << "setting,size,repetition,target_task,c_index\n";
    for (const auto& r : raw) {
        out << to_string(setting) << ',' << r.training_size << ',' << r.repetition << ',' << r.target_task << ','
            << dataio::format_double(r.c_index) << '\n';
    }
}

std::string curves_to_json(std::span<const LearningCurve> curves) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& curve : curves) {
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : curve.points)
            points.push_back({{"size", p.training_size}, {"mean_c_index", p.mean_c_index}, {"std_error", p.std_error}});
        doc.push_back({{"setting", to_string(curve.setting)}, {"repetitions", curve.repetitions}, {"points", points}});
    }
    return doc.dump(2) + "\n";
}

} // namespace eval
} // namespace dyad
