#include "dyad/cli.hpp"

#include "dyad/dataio.hpp"
#include "dyad/error.hpp"
#include "dyad/eval.hpp"
#include "dyad/kernels.hpp"
#include "dyad/pairwise.hpp"
#include "dyad/parallel.hpp"
#include "dyad/twostep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace dyad::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Flag combinations that CLI11 cannot express; reported with exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON and file helpers

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput("model: '" + what + "' must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw InvalidInput("model: '" + what + "' must be a non-empty array of rows");
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw InvalidInput("model: '" + what + "' is not rectangular");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(i), static_cast<Index>(c)) = j[i][c].get<double>();
    }
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::vector<std::string> ids_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput("model: '" + what + "' must be an array of ids");
    return j.get<std::vector<std::string>>();
}

// Positions of `wanted` within `available`; the two must hold the same ids.
std::vector<Index> positions(const std::vector<std::string>& wanted, const std::vector<std::string>& available,
                             const std::string& what) {
    if (wanted.size() != available.size())
        throw InvalidInput(what + ": expected " + std::to_string(wanted.size()) + " ids, found " +
                           std::to_string(available.size()));
    std::unordered_map<std::string, Index> index;
    for (std::size_t i = 0; i < available.size(); ++i) index.emplace(available[i], static_cast<Index>(i));
    std::vector<Index> out;
    out.reserve(wanted.size());
    for (const auto& id : wanted) {
        const auto it = index.find(id);
        if (it == index.end()) throw InvalidInput(what + ": no entry for id '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

// Reorders rows and/or columns of `m` to the given id order; null keeps the axis.
Matrix reorder(const LabeledMatrix& m, const std::vector<std::string>* rows, const std::vector<std::string>* cols,
               const std::string& what) {
    std::vector<Index> r(m.row_ids.size());
    std::vector<Index> c(m.col_ids.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<Index>(i);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = static_cast<Index>(j);
    if (rows) r = positions(*rows, m.row_ids, what + " rows");
    if (cols) c = positions(*cols, m.col_ids, what + " columns");
    Matrix out(static_cast<Index>(r.size()), static_cast<Index>(c.size()));
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < c.size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = m.values(r[i], c[j]);
    return out;
}

struct TrainingData {
    std::vector<std::string> object_ids;
    std::vector<std::string> task_ids;
    Matrix labels;
    Matrix object_kernel;
    Matrix task_kernel;
};

TrainingData load_training(const std::string& object_kernel, const std::string& task_kernel, const std::string& labels,
                           bool impute) {
    const LabeledMatrix y = dataio::load_matrix(labels, MatrixKind::labels);
    TrainingData out;
    out.object_ids = y.row_ids;
    out.task_ids = y.col_ids;
    if (y.missing_count() > 0) {
        if (!impute)
            throw InvalidInput(labels + ": " + std::to_string(y.missing_count()) +
                               " missing label cells; pass --impute to fill them with column means");
        out.labels = dataio::mean_impute(y);
    } else {
        out.labels = y.values;
    }
    const LabeledMatrix k = dataio::load_matrix(object_kernel, MatrixKind::kernel);
    const LabeledMatrix g = dataio::load_matrix(task_kernel, MatrixKind::kernel);
    out.object_kernel = reorder(k, &out.object_ids, &out.object_ids, object_kernel);
    out.task_kernel = reorder(g, &out.task_ids, &out.task_ids, task_kernel);
    return out;
}

std::vector<double> grid_or_default(const std::vector<double>& grid) {
    return grid.empty() ? twostep::default_grid() : grid;
}

json selection_to_json(const SelectionReport& r, bool with_matrices) {
    json doc = {
        {"chosen_lambda_t", r.chosen_lambda_t},
        {"chosen_lambda_d", r.chosen_lambda_d},
        {"error_step1", r.error_step1},
        {"error_step2", r.error_step2},
        {"metric", to_string(r.metric)},
        {"verbatim_step2_loo", r.verbatim_step2_loo},
        {"single_sample_axis", r.single_sample_axis},
        {"grid_t", r.grid_t},
        {"grid_d", r.grid_d},
        {"errors_step1", r.errors_step1},
        {"errors_step2", r.errors_step2},
    };
    if (with_matrices) {
        doc["loo_matrix_step1"] = matrix_to_json(r.loo_matrix_step1);
        doc["loo_matrix_step2"] = matrix_to_json(r.loo_matrix_step2);
    }
    return doc;
}

// ---------------------------------------------------------------------------
// kernel

struct KernelArgs {
    std::string kind = "linear";
    std::string features;
    std::string sequences;
    std::string triplets;
    std::string kernel_in;
    bool normalize_rows = false;
    double gamma = 1.0;
    std::size_t k = 3;
    bool normalize = false;
    std::string out;
};

void run_kernel(const KernelArgs& a) {
    const int inputs = !a.features.empty() + !a.sequences.empty() + !a.triplets.empty() + !a.kernel_in.empty();
    if (inputs != 1) throw UsageError("kernel: give exactly one of --features, --sequences, --triplets, --kernel");
    const KernelSpec spec{parse_kernel_kind(a.kind), a.gamma, a.k, a.normalize};
    spec.validate();

    std::vector<std::string> ids;
    Matrix k;
    if (!a.features.empty() || !a.triplets.empty()) {
        const LabeledMatrix f = !a.features.empty() ? dataio::load_matrix(a.features, MatrixKind::features)
                                                    : dataio::load_sparse_triplets(a.triplets, a.normalize_rows);
        ids = f.row_ids;
        if (spec.kind == KernelKind::linear || spec.kind == KernelKind::gaussian)
            k = kernels::kernel_matrix(spec, f.values, f.values);
        else if (spec.kind == KernelKind::delta)
            k = kernels::kernel_matrix(spec, std::span<const std::string>(ids), std::span<const std::string>(ids));
        else
            throw UsageError("kernel: --kind " + a.kind + " does not apply to feature vectors");
    } else if (!a.sequences.empty()) {
        const auto records = dataio::load_sequences(a.sequences);
        std::vector<std::string> seqs;
        for (const auto& r : records) {
            ids.push_back(r.id);
            seqs.push_back(r.sequence);
        }
        if (spec.kind == KernelKind::spectrum)
            k = kernels::kernel_matrix(spec, std::span<const std::string>(seqs), std::span<const std::string>(seqs));
        else if (spec.kind == KernelKind::delta)
            k = kernels::kernel_matrix(spec, std::span<const std::string>(ids), std::span<const std::string>(ids));
        else
            throw UsageError("kernel: --kind " + a.kind + " does not apply to sequences");
    } else {
        if (spec.kind != KernelKind::precomputed) throw UsageError("kernel: --kernel input requires --kind precomputed");
        const LabeledMatrix in = dataio::load_matrix(a.kernel_in, MatrixKind::kernel);
        ids = in.row_ids;
        k = spec.normalize ? kernels::normalize_square(in.values) : in.values;
    }
    dataio::save_matrix(a.out, dataio::make_labeled(std::move(k), ids, ids));
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string method = "two-step";
    std::string object_kernel;
    std::string task_kernel;
    std::string labels;
    std::string target_kernel;
    std::string target_labels;
    std::optional<double> lambda;
    std::optional<double> lambda_t;
    std::optional<double> lambda_d;
    std::vector<double> grid;
    std::string metric = "mse";
    bool verbatim = false;
    bool impute = false;
    std::string out;
};

json fit_two_step_model(const FitArgs& a, const TrainingData& data, const SelectionOptions& options) {
    if (a.target_kernel.empty()) throw UsageError("fit: --method two-step needs --target-kernel");
    const LabeledMatrix gt = dataio::load_matrix(a.target_kernel, MatrixKind::features);
    const Matrix target_rows = reorder(gt, nullptr, &data.task_ids, a.target_kernel);

    std::optional<LabeledMatrix> tl;
    std::unordered_map<std::string, Index> object_pos;
    for (std::size_t i = 0; i < data.object_ids.size(); ++i) object_pos.emplace(data.object_ids[i], static_cast<Index>(i));
    if (!a.target_labels.empty()) {
        tl = dataio::load_matrix(a.target_labels, MatrixKind::labels);
        for (const auto& id : tl->row_ids)
            if (!object_pos.contains(id)) throw InvalidInput(a.target_labels + ": unknown object id '" + id + "'");
        const std::set<std::string> targets(gt.row_ids.begin(), gt.row_ids.end());
        for (const auto& id : tl->col_ids)
            if (!targets.contains(id)) throw InvalidInput(a.target_labels + ": unknown target id '" + id + "'");
    }

    ColdStartProblem problem;
    problem.object_eigen = linalg::psd_eigen(data.object_kernel);
    problem.task_eigen = linalg::psd_eigen(data.task_kernel);
    problem.labels = data.labels;

    json doc;
    double lt = 0.0;
    double ld = 0.0;
    if (a.lambda_t && a.lambda_d) {
        lt = *a.lambda_t;
        ld = *a.lambda_d;
    } else {
        const auto grid = grid_or_default(a.grid);
        const SelectionReport report =
            twostep::select_lambdas(problem.object_eigen, problem.task_eigen, problem.labels, grid, grid, options);
        lt = report.chosen_lambda_t;
        ld = report.chosen_lambda_d;
        doc["selection"] = selection_to_json(report, false);
    }

    json targets = json::array();
    Matrix first_step;
    for (std::size_t t = 0; t < gt.row_ids.size(); ++t) {
        const std::string& id = gt.row_ids[t];
        problem.target_task_kernel = target_rows.row(static_cast<Index>(t)).transpose();
        problem.labeled_mask.assign(data.object_ids.size(), false);
        std::vector<std::pair<Index, double>> known;
        if (tl) {
            const auto col = std::find(tl->col_ids.begin(), tl->col_ids.end(), id);
            if (col != tl->col_ids.end()) {
                const auto j = static_cast<Index>(col - tl->col_ids.begin());
                for (std::size_t r = 0; r < tl->row_ids.size(); ++r) {
                    if (tl->missing(static_cast<Index>(r), j)) continue;
                    known.emplace_back(object_pos.at(tl->row_ids[r]), tl->values(static_cast<Index>(r), j));
                }
            }
        }
        std::sort(known.begin(), known.end());
        problem.labeled_values.resize(static_cast<Index>(known.size()));
        for (std::size_t i = 0; i < known.size(); ++i) {
            problem.labeled_mask[static_cast<std::size_t>(known[i].first)] = true;
            problem.labeled_values(static_cast<Index>(i)) = known[i].second;
        }
        TwoStepModel model = twostep::fit_two_step(problem, lt, ld);
        targets.push_back({{"id", id},
                           {"labeled_objects", known.size()},
                           {"duals", vector_to_json(model.second_step_duals)},
                           {"imputed_labels", vector_to_json(model.imputed_labels)}});
        if (t == 0) first_step = std::move(model.first_step_duals);
    }
    doc["lambda_t"] = lt;
    doc["lambda_d"] = ld;
    doc["first_step_duals"] = matrix_to_json(first_step);
    doc["targets"] = std::move(targets);
    return doc;
}

double select_pairwise_lambda(const TrainingData& data, const EigenSystem& oe, const EigenSystem& te,
                              const std::vector<double>& grid_in, ErrorMetric metric, json& selection) {
    std::vector<double> grid = grid_in;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    std::vector<double> errors;
    double best = std::numeric_limits<double>::infinity();
    double chosen = grid.front();
    for (double lambda : grid) {
        if (!(lambda > 0.0)) throw InvalidParameter("grid values must be positive");
        const Matrix loo = pairwise::loo_tikhonov(oe, te, data.labels, lambda);
        const double e = twostep::selection_error(metric, loo, data.labels, Axis::columns);
        errors.push_back(e);
        if (e < best) {
            best = e;
            chosen = lambda;
        }
    }
    selection = {{"metric", to_string(metric)}, {"grid", grid}, {"errors", errors}, {"error", best}};
    return chosen;
}

void run_fit(const FitArgs& a, unsigned threads) {
    const bool two_step = a.method == "two-step";
    const bool pair_tik = a.method == "pairwise";
    if (pair_tik && (a.lambda_t || a.lambda_d)) throw UsageError("fit: --method pairwise takes --lambda");
    if (!pair_tik && a.lambda) throw UsageError("fit: --method " + a.method + " takes --lambda-t and --lambda-d");
    if (a.lambda_t.has_value() != a.lambda_d.has_value())
        throw UsageError("fit: give both --lambda-t and --lambda-d, or neither to select them by LOOCV");
    if (!two_step && (!a.target_kernel.empty() || !a.target_labels.empty()))
        throw UsageError("fit: --target-kernel and --target-labels apply to --method two-step only");

    const TrainingData data = load_training(a.object_kernel, a.task_kernel, a.labels, a.impute);
    SelectionOptions options;
    options.metric = parse_error_metric(a.metric);
    options.verbatim_step2_loo = a.verbatim;
    options.threads = resolve_threads(threads);

    json doc = {{"format_version", kModelFormatVersion},
                {"method", a.method},
                {"object_kernel", {{"kind", "precomputed"}, {"source", a.object_kernel}}},
                {"task_kernel", {{"kind", "precomputed"}, {"source", a.task_kernel}}},
                {"object_ids", data.object_ids},
                {"task_ids", data.task_ids}};

    if (two_step) {
        doc.update(fit_two_step_model(a, data, options));
    } else {
        const EigenSystem oe = linalg::psd_eigen(data.object_kernel);
        const EigenSystem te = linalg::psd_eigen(data.task_kernel);
        if (pair_tik) {
            double lambda = 0.0;
            if (a.lambda) {
                lambda = *a.lambda;
            } else {
                json selection;
                lambda = select_pairwise_lambda(data, oe, te, grid_or_default(a.grid), options.metric, selection);
                doc["selection"] = std::move(selection);
            }
            doc["lambda"] = lambda;
            doc["duals"] = matrix_to_json(pairwise::fit_pairwise_tikhonov(oe, te, data.labels, lambda).dual_matrix);
        } else {
            double lt = 0.0;
            double ld = 0.0;
            if (a.lambda_t) {
                lt = *a.lambda_t;
                ld = *a.lambda_d;
            } else {
                const auto grid = grid_or_default(a.grid);
                const SelectionReport report = twostep::select_lambdas(oe, te, data.labels, grid, grid, options);
                lt = report.chosen_lambda_t;
                ld = report.chosen_lambda_d;
                doc["selection"] = selection_to_json(report, false);
            }
            doc["lambda_t"] = lt;
            doc["lambda_d"] = ld;
            doc["duals"] = matrix_to_json(pairwise::fit_pairwise_two_step_ols(oe, te, data.labels, ld, lt).dual_matrix);
        }
    }
    write_json(a.out, doc);
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string model;
    std::string object_rows;
    std::string task_rows;
    std::string out;
};

void run_predict(const PredictArgs& a) {
    const json doc = json::parse(dataio::read_file(a.model));
    if (!doc.contains("format_version") || doc["format_version"] != kModelFormatVersion)
        throw InvalidInput(a.model + ": unsupported model format version");
    const std::string method = doc.at("method").get<std::string>();
    const auto object_ids = ids_from_json(doc.at("object_ids"), "object_ids");
    const auto task_ids = ids_from_json(doc.at("task_ids"), "task_ids");

    const LabeledMatrix q = dataio::load_matrix(a.object_rows, MatrixKind::features);
    Matrix object_rows = reorder(q, nullptr, &object_ids, a.object_rows);

    if (method == "two-step") {
        if (!a.task_rows.empty()) throw UsageError("predict: two-step models predict their stored targets; drop --task-rows");
        const json& targets = doc.at("targets");
        std::vector<std::string> target_ids;
        Matrix out(object_rows.rows(), static_cast<Index>(targets.size()));
        for (std::size_t t = 0; t < targets.size(); ++t) {
            TwoStepModel model;
            model.second_step_duals = vector_from_json(targets[t].at("duals"), "duals");
            target_ids.push_back(targets[t].at("id").get<std::string>());
            out.col(static_cast<Index>(t)) = twostep::predict_target(model, object_rows);
        }
        dataio::save_matrix(a.out, dataio::make_labeled(std::move(out), q.row_ids, target_ids));
        return;
    }
    if (method != "pairwise" && method != "pairwise-two-step")
        throw InvalidInput(a.model + ": unknown method '" + method + "'");
    if (a.task_rows.empty()) throw UsageError("predict: pairwise models need --task-rows");
    const LabeledMatrix gq = dataio::load_matrix(a.task_rows, MatrixKind::features);
    Matrix task_rows = reorder(gq, nullptr, &task_ids, a.task_rows);

    PairwiseModel model;
    model.dual_matrix = matrix_from_json(doc.at("duals"), "duals");
    if (method == "pairwise-two-step") {
        model.variant = PairwiseVariant::two_step_ols;
        model.lambda_t = doc.at("lambda_t").get<double>();
        model.lambda_d = doc.at("lambda_d").get<double>();
        // Queries that are training items pick up the identity-kernel shift.
        const auto add_shift = [](Matrix& rows, const std::vector<std::string>& query, const std::vector<std::string>& train,
                                  double shift) {
            for (std::size_t i = 0; i < query.size(); ++i) {
                const auto it = std::find(train.begin(), train.end(), query[i]);
                if (it != train.end()) rows(static_cast<Index>(i), static_cast<Index>(it - train.begin())) += shift;
            }
        };
        add_shift(object_rows, q.row_ids, object_ids, model.lambda_d);
        add_shift(task_rows, gq.row_ids, task_ids, model.lambda_t);
    } else {
        model.lambda = doc.at("lambda").get<double>();
    }
    Matrix out = pairwise::predict_pairs(model, object_rows, task_rows);
    dataio::save_matrix(a.out, dataio::make_labeled(std::move(out), q.row_ids, gq.row_ids));
}

// ---------------------------------------------------------------------------
// loocv

struct LoocvArgs {
    std::string object_kernel;
    std::string task_kernel;
    std::string labels;
    std::vector<double> grid;
    std::vector<double> grid_t;
    std::vector<double> grid_d;
    std::string metric = "mse";
    bool verbatim = false;
    bool impute = false;
    std::string out;
};

void run_loocv(const LoocvArgs& a, unsigned threads) {
    if (!a.grid.empty() && (!a.grid_t.empty() || !a.grid_d.empty()))
        throw UsageError("loocv: --grid cannot be combined with --grid-t or --grid-d");
    const TrainingData data = load_training(a.object_kernel, a.task_kernel, a.labels, a.impute);
    const auto shared = grid_or_default(a.grid);
    const auto& grid_t = a.grid_t.empty() ? shared : a.grid_t;
    const auto& grid_d = a.grid_d.empty() ? shared : a.grid_d;
    SelectionOptions options;
    options.metric = parse_error_metric(a.metric);
    options.verbatim_step2_loo = a.verbatim;
    options.threads = resolve_threads(threads);
    const SelectionReport report = twostep::select_lambdas(linalg::psd_eigen(data.object_kernel),
                                                           linalg::psd_eigen(data.task_kernel), data.labels, grid_t,
                                                           grid_d, options);
    json doc = selection_to_json(report, true);
    doc["object_ids"] = data.object_ids;
    doc["task_ids"] = data.task_ids;
    write_json(a.out, doc);
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
    std::string config;
    std::string out;
    std::string json_out;
    std::string raw_out;
    std::optional<std::uint64_t> seed;
};

void require_known_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw InvalidInput(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) throw InvalidInput(where + ": unknown key '" + key + "'");
}

DyadicDataset load_dataset(const json& spec, std::uint64_t default_seed) {
    require_known_keys(spec, {"synthetic", "object_kernel", "task_kernel", "labels", "impute"}, "config data");
    if (spec.contains("synthetic")) {
        const json& s = spec["synthetic"];
        require_known_keys(s, {"n_objects", "m_tasks", "object_dim", "task_dim", "noise_sd", "seed"}, "config data.synthetic");
        return eval::generate_synthetic(s.at("n_objects").get<std::size_t>(), s.at("m_tasks").get<std::size_t>(),
                                        s.value("object_dim", std::size_t{5}), s.value("task_dim", std::size_t{5}),
                                        s.value("noise_sd", 0.1), s.value("seed", default_seed))
            .to_dataset();
    }
    const TrainingData data = load_training(spec.at("object_kernel").get<std::string>(),
                                            spec.at("task_kernel").get<std::string>(),
                                            spec.at("labels").get<std::string>(), spec.value("impute", false));
    return {data.object_kernel, data.task_kernel, data.labels};
}

void run_experiment_cmd(const ExperimentArgs& a, unsigned threads) {
    const json config = json::parse(dataio::read_file(a.config));
    require_known_keys(config,
                       {"setting", "settings", "target_sizes", "auxiliary_size", "repetitions", "seed", "grid",
                        "metric_for_selection", "test_fraction", "max_target_tasks", "threads", "data"},
                       "config");
    ExperimentPlan plan;
    plan.target_sizes = config.at("target_sizes").get<std::vector<std::size_t>>();
    if (config.contains("auxiliary_size") && !config["auxiliary_size"].is_null())
        plan.auxiliary_size = config["auxiliary_size"].get<std::size_t>();
    plan.repetitions = config.value("repetitions", std::size_t{1});
    plan.seed = a.seed.value_or(config.value("seed", std::uint64_t{0}));
    plan.grid = config.contains("grid") ? config["grid"].get<std::vector<double>>() : twostep::default_grid();
    plan.metric_for_selection = parse_error_metric(config.value("metric_for_selection", std::string("mse")));
    plan.test_fraction = config.value("test_fraction", plan.test_fraction);
    plan.max_target_tasks = config.value("max_target_tasks", std::size_t{0});
    plan.threads = resolve_threads(threads > 0 ? threads : config.value("threads", 0u));

    std::vector<std::string> settings;
    if (config.contains("settings")) settings = config["settings"].get<std::vector<std::string>>();
    if (config.contains("setting")) settings.push_back(config["setting"].get<std::string>());
    if (settings.empty()) throw InvalidInput("config: name a 'setting' or a list of 'settings'");

    const DyadicDataset data = load_dataset(config.at("data"), plan.seed);
    std::vector<LearningCurve> curves;
    std::ostringstream raw;
    for (const auto& name : settings) {
        plan.setting = parse_setting(name);
        const ExperimentResult result = eval::run_experiment(plan, data);
        curves.push_back(result.curve);
        eval::write_raw_csv(raw, plan.setting, result.raw, curves.size() == 1);
    }

    std::ostringstream csv;
    eval::write_curve_csv(csv, curves);
    write_text(a.out, csv.str());
    if (!a.json_out.empty()) write_text(a.json_out, eval::curves_to_json(curves));
    if (!a.raw_out.empty()) write_text(a.raw_out, raw.str());
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-step kernel ridge regression for dyadic data", "dyad"};
    app.set_version_flag("--version", "dyad 0.1.0");
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: $DYAD_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    const std::vector<std::string> metrics{"mse", "cindex", "one_minus_cindex"};

    KernelArgs kernel;
    auto* kc = app.add_subcommand("kernel", "Compute a kernel matrix");
    kc->add_option("--kind", kernel.kind, "linear, gaussian, spectrum, delta or precomputed")
        ->check(CLI::IsMember({"linear", "gaussian", "spectrum", "delta", "precomputed"}));
    kc->add_option("--features", kernel.features, "Feature matrix CSV")->check(CLI::ExistingFile);
    kc->add_option("--sequences", kernel.sequences, "id<TAB>sequence file")->check(CLI::ExistingFile);
    kc->add_option("--triplets", kernel.triplets, "row_id,feature_id,value CSV")->check(CLI::ExistingFile);
    kc->add_option("--kernel", kernel.kernel_in, "Precomputed kernel CSV")->check(CLI::ExistingFile);
    kc->add_flag("--normalize-rows", kernel.normalize_rows, "Scale triplet rows to unit norm");
    kc->add_option("--gamma", kernel.gamma, "Gaussian width")->check(CLI::PositiveNumber);
    kc->add_option("--k", kernel.k, "Spectrum k-mer length")->check(CLI::PositiveNumber);
    kc->add_flag("--normalize", kernel.normalize, "Cosine-normalize the kernel");
    kc->add_option("--out", kernel.out, "Output kernel CSV")->required();

    FitArgs fit;
    auto* fc = app.add_subcommand("fit", "Train a model and write it as JSON");
    fc->add_option("--method", fit.method)->check(CLI::IsMember({"two-step", "pairwise", "pairwise-two-step"}));
    fc->add_option("--object-kernel", fit.object_kernel, "Object kernel CSV")->required()->check(CLI::ExistingFile);
    fc->add_option("--task-kernel", fit.task_kernel, "Task kernel CSV")->required()->check(CLI::ExistingFile);
    fc->add_option("--labels", fit.labels, "Label matrix CSV (objects x tasks)")->required()->check(CLI::ExistingFile);
    fc->add_option("--target-kernel", fit.target_kernel, "Targets x auxiliary tasks kernel CSV")->check(CLI::ExistingFile);
    fc->add_option("--target-labels", fit.target_labels, "Known target labels CSV (objects x targets)")
        ->check(CLI::ExistingFile);
    fc->add_option("--lambda", fit.lambda)->check(CLI::PositiveNumber);
    fc->add_option("--lambda-t", fit.lambda_t)->check(CLI::PositiveNumber);
    fc->add_option("--lambda-d", fit.lambda_d)->check(CLI::PositiveNumber);
    fc->add_option("--grid", fit.grid, "Comma-separated candidates when lambdas are not given")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    fc->add_option("--metric", fit.metric)->check(CLI::IsMember(metrics));
    fc->add_flag("--verbatim-step2-loo", fit.verbatim, "Score step-2 LOO against Y instead of R");
    fc->add_flag("--impute", fit.impute, "Fill missing labels with column means");
    fc->add_option("--out", fit.out, "Output model JSON")->required();

    PredictArgs predict;
    auto* pc = app.add_subcommand("predict", "Apply a saved model to kernel rows");
    pc->add_option("--model", predict.model)->required()->check(CLI::ExistingFile);
    pc->add_option("--object-rows", predict.object_rows, "Query objects x training objects kernel CSV")
        ->required()
        ->check(CLI::ExistingFile);
    pc->add_option("--task-rows", predict.task_rows, "Query tasks x training tasks kernel CSV")->check(CLI::ExistingFile);
    pc->add_option("--out", predict.out, "Output predictions CSV")->required();

    LoocvArgs loocv;
    auto* lc = app.add_subcommand("loocv", "Select lambda_t and lambda_d by leave-one-out");
    lc->add_option("--object-kernel", loocv.object_kernel)->required()->check(CLI::ExistingFile);
    lc->add_option("--task-kernel", loocv.task_kernel)->required()->check(CLI::ExistingFile);
    lc->add_option("--labels", loocv.labels)->required()->check(CLI::ExistingFile);
    lc->add_option("--grid", loocv.grid)->delimiter(',')->check(CLI::PositiveNumber);
    lc->add_option("--grid-t", loocv.grid_t)->delimiter(',')->check(CLI::PositiveNumber);
    lc->add_option("--grid-d", loocv.grid_d)->delimiter(',')->check(CLI::PositiveNumber);
    lc->add_option("--metric", loocv.metric)->check(CLI::IsMember(metrics));
    lc->add_flag("--verbatim-step2-loo", loocv.verbatim, "Score step-2 LOO against Y instead of R");
    lc->add_flag("--impute", loocv.impute, "Fill missing labels with column means");
    lc->add_option("--out", loocv.out, "Output report JSON")->required();

    ExperimentArgs experiment;
    auto* ec = app.add_subcommand("experiment", "Run learning-curve experiments from a JSON config");
    ec->add_option("--config", experiment.config)->required()->check(CLI::ExistingFile);
    ec->add_option("--out", experiment.out, "Learning curve CSV")->required();
    ec->add_option("--json", experiment.json_out, "Learning curve JSON");
    ec->add_option("--raw", experiment.raw_out, "Per-repetition CSV");
    ec->add_option("--seed", experiment.seed, "Override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*kc) run_kernel(kernel);
        else if (*fc) run_fit(fit, threads);
        else if (*pc) run_predict(predict);
        else if (*lc) run_loocv(loocv, threads);
        else if (*ec) run_experiment_cmd(experiment, threads);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "error: malformed JSON: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

} // namespace dyad::cli
