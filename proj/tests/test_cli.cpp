#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kBinary = APINDEX_CLI_PATH;
const fs::path kData = APINDEX_DATA_DIR;

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("apindex_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = kBinary.string() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string without_last_column(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

}  // namespace

TEST_CASE("index subcommand") {
    const auto dir = scratch("index");
    REQUIRE(run("index --model " + (kData / "swap.json").string() + " --horizon 2 --algo rag --check-oracle --out-dir " + dir.string()) == 0);
    const auto csv = slurp(dir / "index.csv");
    CHECK(csv == "d,i,lambda\n1,0,1\n1,1,0\n2,0,1\n2,1,0.5\n");
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(slurp(dir / "ops.json").find("\"refresh_ops\"") != std::string::npos);
}

TEST_CASE("algorithms produce identical tables") {
    const auto model = (kData / "birth_death.json").string();
    std::string reference;
    for (const std::string algo : {"ag", "rag", "block", "sparse"}) {
        const auto dir = scratch("algo_" + algo);
        REQUIRE(run("index --model " + model + " --horizon 4 --algo " + algo + " --out-dir " + dir.string()) == 0);
        const auto csv = slurp(dir / "index.csv");
        if (reference.empty()) reference = csv;
        CHECK(csv == reference);
    }
}

TEST_CASE("input errors leave no output") {
    const auto dir = scratch("missing");
    CHECK(run("index --model /nonexistent.json --horizon 2 --out-dir " + dir.string()) == 2);
    CHECK_FALSE(fs::exists(dir));
    CHECK(run("calibrate --model " + (kData / "swap.json").string() + " --horizon 2 --digits 0 --out-dir " + dir.string()) == 2);
    CHECK_FALSE(fs::exists(dir));
    CHECK(run("index --horizon 2") == 2);
    CHECK(run("bench --algos nope --n 3 --horizon 2 --out-dir " + dir.string()) == 2);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("calibrate subcommand") {
    const auto dir = scratch("calibrate");
    REQUIRE(run("calibrate --model " + (kData / "swap.json").string() + " --horizon 2 --digits 3 --out-dir " + dir.string()) == 0);
    const auto csv = slurp(dir / "calibration.csv");
    CHECK(csv.find("2,1,0.5\n") != std::string::npos);
    const auto meta = slurp(dir / "calibration_meta.json");
    CHECK(meta.find("\"grid_lo\": 0.0") != std::string::npos);
    CHECK(meta.find("\"grid_hi\": 1.0") != std::string::npos);
}

TEST_CASE("bernoulli subcommand") {
    const auto dir = scratch("bernoulli");
    REQUIRE(run("bernoulli --i0 1 --j0 1 --horizon 3 --beta 1 --out-dir " + dir.string()) == 0);
    const auto csv = slurp(dir / "bernoulli.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
    CHECK(csv.rfind("d,i_key,lambda\n1,1:1,0.5\n", 0) == 0);
    const auto sweep = scratch("sweep");
    REQUIRE(run("bernoulli --horizon 10 --sweep-beta 0.7,0.8,0.9,1.0 --out-dir " + sweep.string()) == 0);
    std::istringstream in(slurp(sweep / "sweep.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "beta,s,lambda");
    double last = 0.0;
    std::string beta_seen;
    while (std::getline(in, line)) {
        const auto b = line.substr(0, line.find(','));
        const double value = std::stod(line.substr(line.rfind(',') + 1));
        if (b == beta_seen) CHECK(value >= last - 1e-12);
        beta_seen = b;
        last = value;
    }
}

TEST_CASE("bench subcommand is deterministic") {
    const auto a = scratch("bench_a");
    const auto b = scratch("bench_b");
    const std::string args = "bench --algos rag,calibration --n 20,40 --horizon 5 --seed 1 --out-dir ";
    REQUIRE(run(args + a.string()) == 0);
    REQUIRE(run(args + b.string()) == 0);
    const auto csv = slurp(a / "bench.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(without_last_column(csv) == without_last_column(slurp(b / "bench.csv")));
}

TEST_CASE("policy compare") {
    const auto dir = scratch("policy");
    REQUIRE(run("policy compare --instance " + (kData / "toy.json").string() + " --out-dir " + dir.string()) == 0);
    std::istringstream in(slurp(dir / "policy.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "policy,value,gap");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::stod(line.substr(line.rfind(',') + 1)) >= -1e-12);
    }
    CHECK(rows == 3);
}
