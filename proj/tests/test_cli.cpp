#include "dyad/cli.hpp"
#include "dyad/dataio.hpp"
#include "dyad/eval.hpp"
#include "dyad/twostep.hpp"
#include "support/oracles.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

using namespace dyad;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("dyad_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    [[nodiscard]] std::string path(const std::string& file) const { return (dir / file).string(); }
    std::string write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file, std::ios::binary) << text;
        return path(file);
    }
};

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::initializer_list<std::string> args) {
    std::vector<std::string> storage{"dyad"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) argv.push_back(s.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) { return dataio::read_file(path); }

} // namespace

TEST_CASE("kernel from a one-row feature file") {
    Scratch s("kernel");
    const auto f = s.write("f.csv", "id,x\na,3\n");
    const Outcome r = run({"kernel", "--kind", "linear", "--features", f, "--out", s.path("K.csv")});
    REQUIRE(r.code == 0);
    const LabeledMatrix k = dataio::load_matrix(s.path("K.csv"), MatrixKind::kernel);
    CHECK(k.values(0, 0) == 9.0);
    CHECK(k.row_ids == std::vector<std::string>{"a"});
}

TEST_CASE("kernel from sequences and triplets") {
    Scratch s("kernel2");
    const auto seqs = s.write("s.tsv", "p\tABAB\nq\tBABA\n");
    REQUIRE(run({"kernel", "--kind", "spectrum", "--k", "2", "--sequences", seqs, "--out", s.path("K.csv")}).code == 0);
    const LabeledMatrix k = dataio::load_matrix(s.path("K.csv"), MatrixKind::kernel);
    // AB:2 BA:1 vs AB:1 BA:2.
    CHECK(k.values(0, 1) == 4.0);
    CHECK(k.values(0, 0) == 5.0);

    const auto trip = s.write("t.csv", "d1,w1,3\nd1,w2,4\nd2,w1,1\n");
    REQUIRE(run({"kernel", "--triplets", trip, "--normalize-rows", "--out", s.path("B.csv")}).code == 0);
    const LabeledMatrix b = dataio::load_matrix(s.path("B.csv"), MatrixKind::kernel);
    CHECK(b.values(0, 0) == doctest::Approx(1.0));
    CHECK(b.values(0, 1) == doctest::Approx(0.6));

    CHECK(run({"kernel", "--kind", "gaussian", "--sequences", seqs, "--out", s.path("x.csv")}).code == 2);
    CHECK(run({"kernel", "--out", s.path("x.csv")}).code == 2);
}

TEST_CASE("scalar chain through fit and predict") {
    Scratch s("scalar");
    const auto k = s.write("K.csv", "id,d\nd,1\n");
    const auto g = s.write("G.csv", "id,t\nt,1\n");
    const auto y = s.write("Y.csv", "id,t\nd,1\n");
    const auto gt = s.write("gt.csv", "id,t\nnew,1\n");
    const Outcome fit = run({"fit", "--method", "two-step", "--object-kernel", k, "--task-kernel", g, "--labels", y,
                             "--target-kernel", gt, "--lambda-t", "1", "--lambda-d", "1", "--out", s.path("m.json")});
    REQUIRE_MESSAGE(fit.code == 0, fit.err);
    const auto model = nlohmann::json::parse(slurp(s.path("m.json")));
    CHECK(model["format_version"] == cli::kModelFormatVersion);
    CHECK(model["targets"][0]["duals"][0] == 0.25);

    const auto rows = s.write("q.csv", "id,d\nq,1\n");
    const Outcome pred = run({"predict", "--model", s.path("m.json"), "--object-rows", rows, "--out", s.path("p.csv")});
    REQUIRE_MESSAGE(pred.code == 0, pred.err);
    const LabeledMatrix p = dataio::load_matrix(s.path("p.csv"), MatrixKind::features);
    CHECK(p.values(0, 0) == 0.25);
    CHECK(p.col_ids == std::vector<std::string>{"new"});
}

TEST_CASE("fit output equals direct library calls bitwise") {
    Scratch s("bitwise");
    std::mt19937_64 rng(211);
    const Matrix x = oracle::random_matrix(6, 3, rng);
    const Matrix t = oracle::random_matrix(5, 3, rng);
    const Matrix k = x * x.transpose();
    const Matrix g_all = t * t.transpose();
    const Matrix g = g_all.topLeftCorner(4, 4);
    const Matrix y = oracle::random_matrix(6, 4, rng);
    const std::vector<std::string> objs{"a", "b", "c", "d", "e", "f"};
    const std::vector<std::string> tasks{"t1", "t2", "t3", "t4"};
    dataio::save_matrix(s.path("K.csv"), dataio::make_labeled(k, objs, objs));
    dataio::save_matrix(s.path("G.csv"), dataio::make_labeled(g, tasks, tasks));
    dataio::save_matrix(s.path("Y.csv"), dataio::make_labeled(y, objs, tasks));
    dataio::save_matrix(s.path("gt.csv"),
                        dataio::make_labeled(Matrix(g_all.col(4).head(4).transpose()), {"target"}, tasks));

    const Outcome r = run({"fit", "--object-kernel", s.path("K.csv"), "--task-kernel", s.path("G.csv"), "--labels",
                           s.path("Y.csv"), "--target-kernel", s.path("gt.csv"), "--grid", "0.1,1,10", "--out",
                           s.path("m.json")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto model = nlohmann::json::parse(slurp(s.path("m.json")));

    ColdStartProblem p;
    p.object_eigen = linalg::psd_eigen(k);
    p.task_eigen = linalg::psd_eigen(g);
    p.labels = y;
    p.target_task_kernel = g_all.col(4).head(4);
    p.labeled_mask.assign(6, false);
    const std::vector<double> grid{0.1, 1.0, 10.0};
    const auto [direct, report] = twostep::select_and_fit(p, grid);
    CHECK(model["lambda_t"].get<double>() == report.chosen_lambda_t);
    CHECK(model["lambda_d"].get<double>() == report.chosen_lambda_d);
    for (Index i = 0; i < 6; ++i) CHECK(model["targets"][0]["duals"][i].get<double>() == direct.second_step_duals(i));

    // Loocv reports the same selection; a single-value grid is echoed back.
    REQUIRE(run({"loocv", "--object-kernel", s.path("K.csv"), "--task-kernel", s.path("G.csv"), "--labels",
                 s.path("Y.csv"), "--grid", "0.1,1,10", "--out", s.path("r.json")})
                .code == 0);
    const auto loo = nlohmann::json::parse(slurp(s.path("r.json")));
    CHECK(loo["chosen_lambda_t"].get<double>() == report.chosen_lambda_t);
    CHECK(loo["error_step2"].get<double>() == report.error_step2);
    CHECK(loo["loo_matrix_step1"][2][1].get<double>() == report.loo_matrix_step1(2, 1));

    REQUIRE(run({"loocv", "--object-kernel", s.path("K.csv"), "--task-kernel", s.path("G.csv"), "--labels",
                 s.path("Y.csv"), "--grid", "0.7", "--verbatim-step2-loo", "--out", s.path("r1.json")})
                .code == 0);
    const auto single = nlohmann::json::parse(slurp(s.path("r1.json")));
    CHECK(single["chosen_lambda_t"] == 0.7);
    CHECK(single["chosen_lambda_d"] == 0.7);
    CHECK(single["verbatim_step2_loo"] == true);
}

TEST_CASE("pairwise fit and prediction") {
    Scratch s("pairwise");
    std::mt19937_64 rng(223);
    const Matrix k = oracle::random_psd(4, rng);
    const Matrix g = oracle::random_psd(3, rng);
    const Matrix y = oracle::random_matrix(4, 3, rng);
    const std::vector<std::string> objs{"a", "b", "c", "d"};
    const std::vector<std::string> tasks{"x", "y", "z"};
    dataio::save_matrix(s.path("K.csv"), dataio::make_labeled(k, objs, objs));
    dataio::save_matrix(s.path("G.csv"), dataio::make_labeled(g, tasks, tasks));
    dataio::save_matrix(s.path("Y.csv"), dataio::make_labeled(y, objs, tasks));

    REQUIRE(run({"fit", "--method", "pairwise-two-step", "--object-kernel", s.path("K.csv"), "--task-kernel",
                 s.path("G.csv"), "--labels", s.path("Y.csv"), "--lambda-t", "0.5", "--lambda-d", "0.25", "--out",
                 s.path("m.json")})
                .code == 0);
    // Predicting the training pairs themselves recovers Y once the shifts are added.
    REQUIRE(run({"predict", "--model", s.path("m.json"), "--object-rows", s.path("K.csv"), "--task-rows",
                 s.path("G.csv"), "--out", s.path("p.csv")})
                .code == 0);
    const LabeledMatrix p = dataio::load_matrix(s.path("p.csv"), MatrixKind::features);
    CHECK(oracle::max_abs(p.values - y) < 1e-9);

    REQUIRE(run({"fit", "--method", "pairwise", "--object-kernel", s.path("K.csv"), "--task-kernel", s.path("G.csv"),
                 "--labels", s.path("Y.csv"), "--out", s.path("t.json")})
                .code == 0);
    const auto model = nlohmann::json::parse(slurp(s.path("t.json")));
    CHECK(model.contains("selection"));
    CHECK(model["lambda"].get<double>() > 0.0);
    CHECK(run({"predict", "--model", s.path("t.json"), "--object-rows", s.path("K.csv"), "--out", s.path("q.csv")})
              .code == 2);
}

TEST_CASE("kernel rows are aligned by id") {
    Scratch s("align");
    const auto k = s.write("K.csv", "id,a,b\na,2,0\nb,0,1\n");
    const auto g = s.write("G.csv", "id,t\nt,1\n");
    const auto y = s.write("Y.csv", "id,t\na,1\nb,2\n");
    const auto gt = s.write("gt.csv", "id,t\nn,1\n");
    REQUIRE(run({"fit", "--object-kernel", k, "--task-kernel", g, "--labels", y, "--target-kernel", gt, "--lambda-t",
                 "1", "--lambda-d", "1", "--out", s.path("m.json")})
                .code == 0);
    const auto in_order = s.write("q1.csv", "id,a,b\nq,1,2\n");
    const auto swapped = s.write("q2.csv", "id,b,a\nq,2,1\n");
    REQUIRE(run({"predict", "--model", s.path("m.json"), "--object-rows", in_order, "--out", s.path("p1.csv")}).code == 0);
    REQUIRE(run({"predict", "--model", s.path("m.json"), "--object-rows", swapped, "--out", s.path("p2.csv")}).code == 0);
    CHECK(slurp(s.path("p1.csv")) == slurp(s.path("p2.csv")));
    const auto wrong = s.write("q3.csv", "id,a,c\nq,1,2\n");
    CHECK(run({"predict", "--model", s.path("m.json"), "--object-rows", wrong, "--out", s.path("p3.csv")}).code == 1);
}

TEST_CASE("partially labeled target") {
    Scratch s("partial");
    const auto k = s.write("K.csv", "id,a,b\na,1,0\nb,0,1\n");
    const auto g = s.write("G.csv", "id,t\nt,1\n");
    const auto y = s.write("Y.csv", "id,t\na,1\nb,2\n");
    const auto gt = s.write("gt.csv", "id,t\nn,1\n");
    const auto zl = s.write("z.csv", "id,n\nb,5\n");
    REQUIRE(run({"fit", "--object-kernel", k, "--task-kernel", g, "--labels", y, "--target-kernel", gt,
                 "--target-labels", zl, "--lambda-t", "1", "--lambda-d", "1", "--out", s.path("m.json")})
                .code == 0);
    const auto model = nlohmann::json::parse(slurp(s.path("m.json")));
    CHECK(model["targets"][0]["imputed_labels"][0] == 0.5);
    CHECK(model["targets"][0]["imputed_labels"][1] == 5.0);
    CHECK(model["targets"][0]["labeled_objects"] == 1);
}

TEST_CASE("missing labels need --impute") {
    Scratch s("impute");
    const auto k = s.write("K.csv", "id,a,b\na,1,0\nb,0,1\n");
    const auto g = s.write("G.csv", "id,t,u\nt,1,0\nu,0,1\n");
    const auto y = s.write("Y.csv", "id,t,u\na,1,\nb,2,4\n");
    const Outcome r = run({"loocv", "--object-kernel", k, "--task-kernel", g, "--labels", y, "--out", s.path("r.json")});
    CHECK(r.code == 1);
    CHECK(r.err.find("--impute") != std::string::npos);
    CHECK(run({"loocv", "--object-kernel", k, "--task-kernel", g, "--labels", y, "--impute", "--out",
               s.path("r.json")})
              .code == 0);
}

TEST_CASE("exit codes") {
    Scratch s("codes");
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"fit", "--labels", "/nonexistent.csv"}).code == 2);
    const auto f = s.write("f.csv", "id,x\na,oops\n");
    const Outcome bad = run({"kernel", "--features", f, "--out", s.path("K.csv")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find(":2:") != std::string::npos);
    const auto k = s.write("K.csv", "id,a\na,1\n");
    CHECK(run({"fit", "--method", "two-step", "--object-kernel", k, "--task-kernel", k, "--labels", k, "--lambda",
               "1", "--out", s.path("m.json")})
              .code == 2);
    CHECK(run({"fit", "--object-kernel", k, "--task-kernel", k, "--labels", k, "--lambda-t", "-1", "--out",
               s.path("m.json")})
              .code == 2);
}

TEST_CASE("experiments are reproducible from a config") {
    Scratch s("experiment");
    const auto config = s.write("plan.json", R"({
        "settings": ["single_task", "almost_full_cold_start"],
        "target_sizes": [3, 6],
        "repetitions": 2,
        "seed": 4,
        "grid": [0.01, 1, 100],
        "max_target_tasks": 3,
        "data": {"synthetic": {"n_objects": 24, "m_tasks": 6, "object_dim": 3, "task_dim": 3, "noise_sd": 0.2}}
    })");
    REQUIRE(run({"--threads", "2", "experiment", "--config", config, "--out", s.path("a.csv"), "--raw",
                 s.path("raw.csv"), "--json", s.path("a.json")})
                .code == 0);
    REQUIRE(run({"experiment", "--config", config, "--out", s.path("b.csv"), "--threads", "1"}).code == 0);
    CHECK(slurp(s.path("a.csv")) == slurp(s.path("b.csv")));
    const std::string csv = slurp(s.path("a.csv"));
    CHECK(csv.rfind("setting,size,mean_c_index,std_error,repetitions\n", 0) == 0);
    CHECK(csv.find("almost_full_cold_start,6,") != std::string::npos);

    // The CLI is a thin adapter over run_experiment.
    ExperimentPlan plan;
    plan.setting = Setting::single_task;
    plan.target_sizes = {3, 6};
    plan.repetitions = 2;
    plan.seed = 4;
    plan.grid = {0.01, 1, 100};
    plan.max_target_tasks = 3;
    plan.threads = 1;
    const auto result = eval::run_experiment(plan, eval::generate_synthetic(24, 6, 3, 3, 0.2, 4).to_dataset());
    CHECK(csv.find("single_task,3," + dataio::format_double(result.curve.points[0].mean_c_index)) != std::string::npos);

    REQUIRE(run({"experiment", "--config", config, "--seed", "5", "--out", s.path("c.csv")}).code == 0);
    CHECK(slurp(s.path("c.csv")) != slurp(s.path("a.csv")));

    const auto typo = s.write("typo.json", R"({"setting": "single_task", "target_size": [3], "data": {}})");
    CHECK(run({"experiment", "--config", typo, "--out", s.path("d.csv")}).code == 1);
}
