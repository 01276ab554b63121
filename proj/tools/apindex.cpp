#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>

#include "apindex/bench.hpp"
#include "apindex/calibration.hpp"
#include "apindex/countable.hpp"
#include "apindex/io.hpp"
#include "apindex/oracle.hpp"
#include "apindex/policy.hpp"
#include "apindex/rag.hpp"

using namespace apindex;
using nlohmann::json;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int env_threads() {
    const char* value = std::getenv("APINDEX_THREADS");
    if (!value || !*value) return 1;
    try {
        return std::max(1, std::stoi(value));
    } catch (const std::exception&) {
        throw io::InputError("APINDEX_THREADS must be a positive integer");
    }
}

struct IndexArgs {
    std::string model;
    int horizon = 0;
    std::string algo = "rag";
    std::string out_dir = ".";
    bool order = false;
    bool check_oracle = false;
};

int run_index(const IndexArgs& a) {
    const auto input = io::load_model(a.model);
    if (input.is_countable()) throw io::InputError("countable families are handled by the 'bernoulli' subcommand");
    if (a.horizon < 1) throw io::InputError("--horizon must be at least 1");

    RagStats stats;
    IndexTable table;
    if (a.algo == "ag") table = ag_reference(input.as_dense(), a.horizon);
    else if (a.algo == "rag") table = rag_full(input.as_dense(), a.horizon, &stats);
    else if (a.algo == "block") table = block_rag_full(input.as_dense(), a.horizon, &stats);
    else table = rag_full_sparse(input.as_sparse(), a.horizon, &stats);

    io::OutputSet out;
    out.add("index.csv", io::index_csv(table));
    if (a.order) out.add("order.csv", io::order_csv(table));
    if (a.algo != "ag") out.add_json("ops.json", io::ops_json(stats.ops));

    bool failed = false;
    if (a.check_oracle) {
        const auto model = input.as_dense();
        json report{{"tolerance", 1e-9}};
        if (profile_count(model.n, a.horizon) > kEnumerationBudget) {
            report["checked"] = false;
            report["reason"] = "instance exceeds the enumeration budget";
        } else {
            const double diff = max_abs_difference(table, oracle_index_table(model, a.horizon));
            report["checked"] = true;
            report["max_abs_difference"] = diff;
            failed = !(diff <= 1e-9);
        }
        report["passed"] = !failed;
        out.add_json("oracle_check.json", report);
    }

    io::Manifest manifest{"index", {{"model", a.model}, {"horizon", a.horizon}, {"algo", a.algo}, {"order", a.order}, {"check_oracle", a.check_oracle}}, 0, {a.model}};
    manifest.attach(out);
    out.write(a.out_dir);
    if (failed) throw CheckFailed("index values disagree with the enumeration oracle");
    return 0;
}

struct CalibrateArgs {
    std::string model;
    int horizon = 0;
    int digits = 3;
    std::size_t points = 0;
    double eps = 1e-9;
    std::string path = "block";
    std::string out_dir = ".";
};

int run_calibrate(const CalibrateArgs& a) {
    const auto input = io::load_model(a.model);
    if (input.is_countable()) throw io::InputError("calibration needs a finite model");
    if (a.horizon < 1) throw io::InputError("--horizon must be at least 1");
    if (a.points == 0 && a.digits < 1) throw io::InputError("--digits must be at least 1 (a grid needs L >= 2 points)");
    if (a.points == 1) throw io::InputError("--points must be at least 2");
    if (!(a.eps >= 0.0)) throw io::InputError("--eps must be nonnegative");
    const auto model = input.as_dense();
    const double lo = *std::min_element(model.rewards.begin(), model.rewards.end());
    const double hi = *std::max_element(model.rewards.begin(), model.rewards.end());
    const auto grid = a.points ? (lo < hi ? LambdaGrid::uniform(lo, hi, a.points) : LambdaGrid{{lo}}) : LambdaGrid::significant_digits(model, a.digits);

    CalibrationOptions options;
    options.eps = a.eps;
    options.path = a.path == "scalar" ? CalibrationPath::Scalar : CalibrationPath::Block;
    options.threads = env_threads();
    CalibrationStats stats;
    const auto table = calibrate_index(model, grid, a.horizon, options, &stats);

    io::OutputSet out;
    out.add("calibration.csv", io::calibration_csv(table));
    out.add_json("calibration_meta.json", {{"grid_lo", grid.values.front()},
                                           {"grid_hi", grid.values.back()},
                                           {"L", grid.size()},
                                           {"spacing", grid.spacing()},
                                           {"eps", a.eps},
                                           {"path", a.path},
                                           {"ops", stats.ops},
                                           {"block_products", stats.block_products},
                                           {"peak_slots", stats.peak_slots}});
    io::Manifest manifest{"calibrate", {{"model", a.model}, {"horizon", a.horizon}, {"digits", a.digits}, {"points", a.points}, {"eps", a.eps}, {"path", a.path}, {"threads", options.threads}}, 0, {a.model}};
    manifest.attach(out);
    out.write(a.out_dir);
    return 0;
}

struct BernoulliArgs {
    std::int64_t i0 = 1;
    std::int64_t j0 = 1;
    int horizon = 0;
    double beta = 1.0;
    std::vector<double> sweep;
    bool block = false;
    std::string out_dir = ".";
};

int run_bernoulli(const BernoulliArgs& a) {
    if (a.i0 < 1 || a.j0 < 1) throw io::InputError("--i0 and --j0 must be at least 1");
    if (a.horizon < 1) throw io::InputError("--horizon must be at least 1");
    auto solve = [&](double beta, RagStats* stats) {
        if (!(beta > 0.0 && beta <= 1.0)) throw io::InputError("discount factor outside (0, 1]");
        const auto spec = beta_bernoulli_spec(beta);
        return a.block ? block_rag_from_initial(spec, {a.i0, a.j0}, a.horizon, stats) : rag_from_initial(spec, {a.i0, a.j0}, a.horizon, stats);
    };
    for (double beta : a.sweep)
        if (!(beta > 0.0 && beta <= 1.0)) throw io::InputError("discount factor outside (0, 1]");

    io::OutputSet out;
    json args{{"i0", a.i0}, {"j0", a.j0}, {"horizon", a.horizon}, {"block", a.block}};
    if (a.sweep.empty()) {
        RagStats stats;
        const auto table = solve(a.beta, &stats);
        out.add("bernoulli.csv", io::keyed_index_csv(table, beta_bernoulli_spec(a.beta)));
        out.add_json("ops.json", io::ops_json(stats.ops));
        args["beta"] = a.beta;
    } else {
        std::string csv = "beta,s,lambda\n";
        for (double beta : a.sweep) {
            const auto table = solve(beta, nullptr);
            for (int s = 1; s <= a.horizon; ++s) csv += io::format_double(beta) + "," + std::to_string(s) + "," + io::format_double(table.at(s, 0)) + "\n";
        }
        out.add("sweep.csv", csv);
        args["sweep_beta"] = a.sweep;
    }
    io::Manifest manifest{"bernoulli", args, 0, {}};
    manifest.attach(out);
    out.write(a.out_dir);
    return 0;
}

struct BenchArgs {
    std::vector<std::string> algos;
    std::vector<int> sizes;
    std::vector<int> horizons;
    std::vector<std::uint64_t> seeds{1};
    double beta = 1.0;
    int digits = 3;
    std::string calibration_path = "scalar";
    std::vector<int> fit_orders;
    std::string out_dir = ".";
};

int run_bench(const BenchArgs& a) {
    SweepConfig config;
    config.algorithms = a.algos;
    config.sizes = a.sizes;
    config.horizons = a.horizons;
    config.seeds = a.seeds;
    config.beta = a.beta;
    config.digits = a.digits;
    config.scalar_calibration = a.calibration_path == "scalar";
    config.threads = env_threads();
    if (!(a.beta > 0.0 && a.beta <= 1.0)) throw io::InputError("--beta outside (0, 1]");
    if (a.digits < 1) throw io::InputError("--digits must be at least 1");
    for (const auto& algo : a.algos)
        if (std::find(known_algorithms().begin(), known_algorithms().end(), algo) == known_algorithms().end())
            throw io::InputError("unknown algorithm '" + algo + "'");
    for (const auto& algo : a.algos)
        if (algo != "rag_i0" && a.sizes.empty()) throw io::InputError("--n is required for " + algo);

    const auto records = run_scaling_sweep(config);
    io::OutputSet out;
    out.add("bench.csv", io::bench_csv(records));

    if (!a.fit_orders.empty()) {
        json fits = json::array();
        for (const auto& algo : a.algos) {
            // Fit along n when several sizes were run, otherwise along T.
            const bool along_n = algo != "rag_i0" && a.sizes.size() > 1;
            std::map<double, std::vector<double>> points;
            for (const auto& r : records)
                if (r.algo == algo) points[along_n ? r.n : r.horizon].push_back(static_cast<double>(r.ops));
            std::vector<double> xs, ys;
            for (const auto& [x, v] : points) {
                xs.push_back(x);
                double sum = 0.0;
                for (double y : v) sum += y;
                ys.push_back(sum / static_cast<double>(v.size()));
            }
            std::vector<int> orders;
            for (int order : a.fit_orders)
                if (xs.size() > static_cast<std::size_t>(order) + 1) orders.push_back(order);
            if (orders.empty()) continue;
            const auto sel = select_fit_order(xs, ys, orders);
            for (std::size_t k = 0; k < sel.fits.size(); ++k) {
                const auto& fit = sel.fits[k];
                fits.push_back({{"algo", algo}, {"axis", along_n ? "n" : "T"}, {"order", fit.order}, {"coeffs", fit.coeffs},
                                {"rmse", fit.rmse}, {"lead_t", fit.lead_t}, {"admissible", static_cast<bool>(sel.admissible[k])},
                                {"selected", fit.order == sel.best_order}});
            }
        }
        out.add_json("fit.json", {{"fits", fits}});
    }

    std::uint64_t seed = a.seeds.empty() ? 0 : a.seeds.front();
    io::Manifest manifest{"bench", {{"algos", a.algos}, {"n", a.sizes}, {"horizon", a.horizons}, {"seeds", a.seeds}, {"beta", a.beta}, {"digits", a.digits}, {"calibration_path", a.calibration_path}, {"fit_orders", a.fit_orders}, {"threads", config.threads}}, seed, {}};
    manifest.attach(out);
    out.write(a.out_dir);
    return 0;
}

struct PolicyArgs {
    std::string instance;
    std::uint64_t monte_carlo = 0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

std::string policy_csv(const FhmabInstance& inst, const PolicyArgs& a) {
    std::vector<IndexTable> tables;
    for (const auto& p : inst.projects) tables.push_back(rag_full(p, inst.horizon));
    const double optimal = fhmab_optimal_value(inst);
    std::string csv = "policy,value,gap\n";
    csv += "optimal," + io::format_double(optimal) + ",0\n";
    for (auto rule : {HeuristicRule::Index, HeuristicRule::Myopic}) {
        const double value = evaluate_heuristic(inst, rule, tables).value;
        csv += std::string(rule_name(rule)) + "," + io::format_double(value) + "," + io::format_double(optimal - value) + "\n";
    }
    if (a.monte_carlo > 0) {
        const auto est = simulate_heuristic(inst, HeuristicRule::Index, tables, a.monte_carlo, a.seed);
        csv += "index_mc," + io::format_double(est.mean) + "," + io::format_double(optimal - est.mean) + "\n";
    }
    return csv;
}

int run_policy(const PolicyArgs& a) {
    const auto instances = io::load_instances(a.instance);
    io::OutputSet out;
    if (instances.size() == 1) {
        out.add("policy.csv", policy_csv(instances[0], a));
    } else {
        for (std::size_t k = 0; k < instances.size(); ++k) out.add("policy_" + std::to_string(k) + ".csv", policy_csv(instances[k], a));
    }
    io::Manifest manifest{"policy compare", {{"instance", a.instance}, {"monte_carlo", a.monte_carlo}, {"seed", a.seed}}, a.seed, {a.instance}};
    manifest.attach(out);
    out.write(a.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-horizon average-productivity index toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", io::version());

    IndexArgs index_args;
    auto* index = app.add_subcommand("index", "exact index table of a finite model");
    index->add_option("--model", index_args.model, "model JSON")->required();
    index->add_option("--horizon", index_args.horizon, "horizon T")->required();
    index->add_option("--algo", index_args.algo, "ag | rag | block | sparse")->check(CLI::IsMember({"ag", "rag", "block", "sparse"}));
    index->add_option("--out-dir", index_args.out_dir);
    index->add_flag("--order", index_args.order, "also write the emission order");
    index->add_flag("--check-oracle", index_args.check_oracle, "compare against brute-force enumeration when small");

    CalibrateArgs cal_args;
    auto* calibrate = app.add_subcommand("calibrate", "approximate index by grid calibration");
    calibrate->add_option("--model", cal_args.model, "model JSON")->required();
    calibrate->add_option("--horizon", cal_args.horizon, "horizon T")->required();
    calibrate->add_option("--digits", cal_args.digits, "significant digits m (L = 10^m + 1)");
    calibrate->add_option("--points", cal_args.points, "explicit grid size L (overrides --digits)");
    calibrate->add_option("--eps", cal_args.eps, "relative tolerance of the retirement test");
    calibrate->add_option("--path", cal_args.path, "block | scalar")->check(CLI::IsMember({"block", "scalar"}));
    calibrate->add_option("--out-dir", cal_args.out_dir);

    BernoulliArgs bern_args;
    auto* bernoulli = app.add_subcommand("bernoulli", "index of the Beta-Bernoulli project from (i0, j0)");
    bernoulli->add_option("--i0", bern_args.i0);
    bernoulli->add_option("--j0", bern_args.j0);
    bernoulli->add_option("--horizon", bern_args.horizon)->required();
    bernoulli->add_option("--beta", bern_args.beta);
    bernoulli->add_option("--sweep-beta", bern_args.sweep, "comma-separated discount factors")->delimiter(',');
    bernoulli->add_flag("--block", bern_args.block, "use the block variant");
    bernoulli->add_option("--out-dir", bern_args.out_dir);

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "scaling sweep with operation counts");
    bench->add_option("--algos", bench_args.algos, "rag,block_rag,rag_sparse,calibration,rag_i0")->required()->delimiter(',');
    bench->add_option("--n", bench_args.sizes)->delimiter(',');
    bench->add_option("--horizon", bench_args.horizons)->required()->delimiter(',');
    bench->add_option("--seed", bench_args.seeds)->delimiter(',');
    bench->add_option("--beta", bench_args.beta);
    bench->add_option("--digits", bench_args.digits);
    bench->add_option("--calibration-path", bench_args.calibration_path)->check(CLI::IsMember({"block", "scalar"}));
    bench->add_option("--fit", bench_args.fit_orders, "polynomial orders to fit, e.g. 2,3,4")->delimiter(',');
    bench->add_option("--out-dir", bench_args.out_dir);

    PolicyArgs policy_args;
    auto* policy = app.add_subcommand("policy", "policy evaluation");
    policy->require_subcommand(1);
    auto* compare = policy->add_subcommand("compare", "optimal, index and myopic values");
    compare->add_option("--instance", policy_args.instance, "instance JSON")->required();
    compare->add_option("--monte-carlo", policy_args.monte_carlo, "also simulate the index rule this many times");
    compare->add_option("--seed", policy_args.seed);
    compare->add_option("--out-dir", policy_args.out_dir);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInputError;
    }

    try {
        if (*index) return run_index(index_args);
        if (*calibrate) return run_calibrate(cal_args);
        if (*bernoulli) return run_bernoulli(bern_args);
        if (*bench) return run_bench(bench_args);
        if (*compare) return run_policy(policy_args);
    } catch (const io::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const ModelValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const CheckFailed& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    return 0;
}
