// Command-line front end: simulate benchmark data, run the partition
// searches, score results against ground truth, and reproduce the summary
// tables.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mdlpart/mdlpart.hpp"

namespace {

using namespace mdlpart;

ModelKind fit_kind_from_string(const std::string& s) {
    if (s == "linear") return ModelKind::linear;
    if (s == "exp" || s == "exponential") return ModelKind::exponential_linear;
    throw std::invalid_argument("unknown fit kind '" + s + "' (expected linear|exp)");
}

std::string fit_kind_label(ModelKind kind) {
    return kind == ModelKind::exponential_linear ? "exponential" : "linear";
}

struct SimulateArgs {
    std::string type = "type1";
    int leaf_size = 0;
    int features = 20;
    double noise = 0.0;
    int poly_degree = 3;
    unsigned long long seed = 0;
    std::string out_dir;
};

void run_simulate(const SimulateArgs& args) {
    SimSpec spec;
    spec.dataset_type = dataset_type_from_string(args.type);
    spec.d = args.features;
    spec.leaf_size = args.leaf_size;
    spec.noise_sd = args.noise;
    spec.poly_degree = args.poly_degree;
    spec.seed = args.seed;
    const Simulation sim = generate(spec);

    std::filesystem::create_directories(args.out_dir);
    const auto dir = std::filesystem::path(args.out_dir);
    const CsvSchema schema = default_schema(sim.dataset, sim.tree);
    write_data_csv((dir / "data.csv").string(), sim.dataset, sim.tree, schema);
    write_schema_json((dir / "schema.json").string(), schema);
    write_truth_json((dir / "truth.json").string(), sim.tree, sim.truth);
    std::cout << "wrote " << (dir / "data.csv").string() << " (" << sim.dataset.n() << " rows, "
              << sim.dataset.d() << " features, " << sim.truth.partition.size()
              << " ground-truth clusters)\n";
}

struct FitArgs {
    std::string data_path;
    std::string schema_path;
    double gamma = 0.05;
    std::string kind = "linear";
    unsigned long long seed = 0;
    int folds = 10;
    std::string out_path;
    std::string dot_path;
};

void run_fit(const FitArgs& args, bool greedy) {
    const CsvSchema schema = load_schema_json(args.schema_path);
    const LoadedData loaded = load_csv(args.data_path, schema);

    SearchConfig config;
    config.gamma = args.gamma;
    config.seed = args.seed;
    config.cv_folds = args.folds;
    config.fit_options.kind = fit_kind_from_string(args.kind);

    const InferenceReport report =
        greedy ? greedy_partition(loaded.dataset, loaded.tree, config)
               : find_maximal_homogeneous_partition(loaded.dataset, loaded.tree, config);

    ReportMeta meta;
    meta.algorithm = greedy ? "greedy" : "opt";
    meta.fit_kind = fit_kind_label(config.fit_options.kind);
    meta.seed = args.seed;
    meta.partition_rmse = partition_rmse(report, loaded.dataset, loaded.tree);
    write_report_json(args.out_path, report, loaded.tree, loaded.dataset, meta);
    if (!args.dot_path.empty()) write_dot(args.dot_path, loaded.tree, report);
    std::cout << meta.algorithm << ": selected " << report.partition.size() << " clusters, rmse "
              << meta.partition_rmse << ", gamma_prime " << report.gamma_prime << "\n";
}

struct EvaluateArgs {
    std::string report_path;
    std::string truth_path;
    std::string out_path;
};

void run_evaluate(const EvaluateArgs& args) {
    const ReportSummary report = load_report_json(args.report_path);
    const TruthSummary truth = load_truth_json(args.truth_path);
    const Confusion c = confusion_by_name(truth, report);
    const Scores s = prf1(c);
    write_metrics_json(args.out_path, c, s, report.partition_rmse);
    std::cout << "precision " << s.precision << ", recall " << s.recall << ", f1 " << s.f1
              << ", rmse " << report.partition_rmse << "\n";
}

struct BenchArgs {
    std::string types = "type1,type2,type3,type4";
    int repeats = 20;
    unsigned long long seed = 0;
    int leaf_size = 200;
    int features = 5;
    double noise = 0.0;
    std::string kind = "linear";
    double gamma = 0.05;
    std::string out_path;
    int jobs = 0;
};

struct BenchRecord {
    double opt_rmse = 0, greedy_rmse = 0, linear_rmse = 0, null_rmse = 0;
    Scores opt_scores, greedy_scores;
};

BenchRecord bench_instance(DatasetType type, const BenchArgs& args, unsigned long long seed) {
    SimSpec spec;
    spec.dataset_type = type;
    spec.d = args.features;
    spec.leaf_size = args.leaf_size;
    spec.noise_sd = args.noise;
    spec.seed = seed;
    const Simulation sim = generate(spec);

    SearchConfig config;
    config.gamma = args.gamma;
    config.seed = seed;
    config.fit_options.kind = fit_kind_from_string(args.kind);

    BenchRecord rec;
    const InferenceReport opt = find_maximal_homogeneous_partition(sim.dataset, sim.tree, config);
    const InferenceReport greedy = greedy_partition(sim.dataset, sim.tree, config);
    rec.opt_rmse = partition_rmse(opt, sim.dataset, sim.tree);
    rec.greedy_rmse = partition_rmse(greedy, sim.dataset, sim.tree);
    rec.linear_rmse = pooled_linear_rmse(sim.dataset, config.fit_options);
    rec.null_rmse = null_model_rmse(sim.dataset);
    rec.opt_scores = prf1(confusion(sim.tree, sim.truth, opt.partition));
    rec.greedy_scores = prf1(confusion(sim.tree, sim.truth, greedy.partition));
    return rec;
}

void run_bench(const BenchArgs& args) {
    std::vector<DatasetType> types;
    {
        std::stringstream ss(args.types);
        std::string token;
        while (std::getline(ss, token, ','))
            if (!token.empty()) types.push_back(dataset_type_from_string(token));
    }
    if (types.empty()) throw std::invalid_argument("bench: no dataset types given");
    if (args.repeats < 1) throw std::invalid_argument("bench: repeats must be positive");

    struct Task { std::size_t type_index; int repeat; };
    std::vector<Task> tasks;
    for (std::size_t t = 0; t < types.size(); ++t)
        for (int r = 0; r < args.repeats; ++r) tasks.push_back({t, r});
    std::vector<BenchRecord> records(tasks.size());

    const unsigned hw = std::thread::hardware_concurrency();
    const int workers =
        args.jobs > 0 ? args.jobs : static_cast<int>(std::min<unsigned>(hw ? hw : 1, 8));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                records[i] = bench_instance(types[tasks[i].type_index], args,
                                            args.seed + static_cast<unsigned long long>(tasks[i].repeat));
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + args.out_path + "'");
    out << "type,opt_rmse,greedy_rmse,linear_rmse,null_rmse,"
           "opt_precision,opt_recall,opt_f1,greedy_precision,greedy_recall,greedy_f1\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    for (std::size_t t = 0; t < types.size(); ++t) {
        BenchRecord mean;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].type_index != t) continue;
            mean.opt_rmse += records[i].opt_rmse;
            mean.greedy_rmse += records[i].greedy_rmse;
            mean.linear_rmse += records[i].linear_rmse;
            mean.null_rmse += records[i].null_rmse;
            mean.opt_scores.precision += records[i].opt_scores.precision;
            mean.opt_scores.recall += records[i].opt_scores.recall;
            mean.opt_scores.f1 += records[i].opt_scores.f1;
            mean.greedy_scores.precision += records[i].greedy_scores.precision;
            mean.greedy_scores.recall += records[i].greedy_scores.recall;
            mean.greedy_scores.f1 += records[i].greedy_scores.f1;
        }
        const double r = static_cast<double>(args.repeats);
        out << to_string(types[t]) << ',' << fmt(mean.opt_rmse / r) << ','
            << fmt(mean.greedy_rmse / r) << ',' << fmt(mean.linear_rmse / r) << ','
            << fmt(mean.null_rmse / r) << ',' << fmt(mean.opt_scores.precision / r) << ','
            << fmt(mean.opt_scores.recall / r) << ',' << fmt(mean.opt_scores.f1 / r) << ','
            << fmt(mean.greedy_scores.precision / r) << ',' << fmt(mean.greedy_scores.recall / r)
            << ',' << fmt(mean.greedy_scores.f1 / r) << '\n';
    }
    std::cout << "wrote " << args.out_path << " (" << types.size() << " types x " << args.repeats
              << " repeats)\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MDL-scored regression over multi-resolution cluster hierarchies"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
    sim->add_option("--type", sim_args.type,
                    "dataset type: type1|type2|type3|type4|exponential|polynomial")
        ->capture_default_str();
    sim->add_option("--leaf-size", sim_args.leaf_size,
                    "individuals per last-layer cluster (0 = type default)")
        ->capture_default_str();
    sim->add_option("--features", sim_args.features, "number of independent variables")
        ->capture_default_str();
    sim->add_option("--noise", sim_args.noise, "noise standard deviation")->capture_default_str();
    sim->add_option("--poly-degree", sim_args.poly_degree, "polynomial generator degree")
        ->capture_default_str();
    sim->add_option("--seed", sim_args.seed, "random seed")->capture_default_str();
    sim->add_option("--out", sim_args.out_dir, "output directory")->required();

    FitArgs fit_args;
    auto add_fit_options = [&](CLI::App* cmd) {
        cmd->add_option("--data", fit_args.data_path, "data CSV")->required();
        cmd->add_option("--schema", fit_args.schema_path, "schema JSON")->required();
        cmd->add_option("--gamma", fit_args.gamma, "homogeneity threshold")
            ->capture_default_str();
        cmd->add_option("--kind", fit_args.kind, "fit kind: linear|exp")->capture_default_str();
        cmd->add_option("--seed", fit_args.seed, "random seed for cross-validation folds")
            ->capture_default_str();
        cmd->add_option("--folds", fit_args.folds, "folds for last-layer cross-validation")
            ->capture_default_str();
        cmd->add_option("--out", fit_args.out_path, "report JSON path")->required();
        cmd->add_option("--dot", fit_args.dot_path, "also write a DOT digraph here");
    };
    auto* fit = app.add_subcommand("fit", "infer the maximal homogeneous partition");
    add_fit_options(fit);
    auto* greedy = app.add_subcommand("greedy", "run the greedy RMSE baseline");
    add_fit_options(greedy);

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "score a report against ground truth");
    evaluate->add_option("--report", eval_args.report_path, "report JSON from fit/greedy")
        ->required();
    evaluate->add_option("--truth", eval_args.truth_path, "truth JSON from simulate")->required();
    evaluate->add_option("--out", eval_args.out_path, "metrics JSON path")->required();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "run repeated benchmarks and tabulate means");
    bench->add_option("--types", bench_args.types, "comma-separated dataset types")
        ->capture_default_str();
    bench->add_option("--repeats", bench_args.repeats, "instances per type")
        ->capture_default_str();
    bench->add_option("--seed", bench_args.seed, "base seed; repeat r uses seed+r")
        ->capture_default_str();
    bench->add_option("--leaf-size", bench_args.leaf_size, "individuals per last-layer cluster")
        ->capture_default_str();
    bench->add_option("--features", bench_args.features, "number of independent variables")
        ->capture_default_str();
    bench->add_option("--noise", bench_args.noise, "noise standard deviation")
        ->capture_default_str();
    bench->add_option("--kind", bench_args.kind, "fit kind: linear|exp")->capture_default_str();
    bench->add_option("--gamma", bench_args.gamma, "homogeneity threshold")
        ->capture_default_str();
    bench->add_option("--jobs", bench_args.jobs, "worker threads (0 = auto)")
        ->capture_default_str();
    bench->add_option("--out", bench_args.out_path, "summary CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sim)) run_simulate(sim_args);
        else if (app.got_subcommand(fit)) run_fit(fit_args, false);
        else if (app.got_subcommand(greedy)) run_fit(fit_args, true);
        else if (app.got_subcommand(evaluate)) run_evaluate(eval_args);
        else if (app.got_subcommand(bench)) run_bench(bench_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
