#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "apindex/bench.hpp"
#include "apindex/index_table.hpp"
#include "apindex/model.hpp"
#include "apindex/policy.hpp"

namespace apindex::io {

// Malformed or missing input; the CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelInput {
    std::optional<BanditModel> dense;
    std::optional<SparseBanditModel> sparse;
    // beta_bernoulli family
    std::optional<CountableModelSpec> countable;
    StateKey initial;

    bool is_countable() const { return countable.has_value(); }
    // Dense view of a finite model (converted from sparse if needed).
    BanditModel as_dense() const;
    SparseBanditModel as_sparse() const;
};

ModelInput parse_model(const nlohmann::json& doc);
ModelInput load_model(const std::filesystem::path& path);

FhmabInstance parse_instance(const nlohmann::json& doc);
std::vector<FhmabInstance> load_instances(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

// Round-trippable decimal form of a double.
std::string format_double(double value);

std::string index_csv(const IndexTable& table);
std::string order_csv(const IndexTable& table);
std::string calibration_csv(const IndexTable& table);
std::string keyed_index_csv(const IndexTable& table, const CountableModelSpec& spec);
std::string bench_csv(const std::vector<ScalingRecord>& records);
nlohmann::json ops_json(const OpCounts& ops);

// Files are staged in memory and written together, so a failure leaves no partial output.
class OutputSet {
public:
    void add(const std::string& name, std::string contents);
    void add_json(const std::string& name, nlohmann::json doc);
    std::vector<std::string> names() const;
    void write(const std::filesystem::path& dir) const;

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

struct Manifest {
    std::string subcommand;
    nlohmann::json args = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<std::filesystem::path> inputs;

    // Adds manifest.json (listing every staged output) to `outputs`.
    void attach(OutputSet& outputs) const;
};

inline constexpr const char* kManifestName = "manifest.json";

const char* version();

}  // namespace apindex::io
