#include "apindex/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef APINDEX_VERSION
#define APINDEX_VERSION "0.0.0"
#endif

namespace apindex::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T field(const json& doc, const char* name) {
    if (!doc.contains(name)) throw InputError(std::string("missing field '") + name + "'");
    try {
        return doc.at(name).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("field '") + name + "' has the wrong type");
    }
}

json parse_text(const std::string& text, const fs::path& path) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace

BanditModel ModelInput::as_dense() const {
    if (dense) return *dense;
    if (sparse) return to_dense(*sparse);
    throw InputError("a finite model is required");
}

SparseBanditModel ModelInput::as_sparse() const {
    if (sparse) return *sparse;
    if (dense) return to_sparse(*dense);
    throw InputError("a finite model is required");
}

ModelInput parse_model(const json& doc) {
    if (!doc.is_object()) throw InputError("model must be a JSON object");
    ModelInput out;
    if (doc.contains("family")) {
        const auto family = field<std::string>(doc, "family");
        if (family != "beta_bernoulli") throw InputError("unknown model family '" + family + "'");
        const auto beta = field<double>(doc, "beta");
        const auto i0 = field<std::int64_t>(doc, "i0");
        const auto j0 = field<std::int64_t>(doc, "j0");
        if (i0 < 1 || j0 < 1) throw InputError("Beta parameters i0, j0 must be at least 1");
        try {
            out.countable = beta_bernoulli_spec(beta);
        } catch (const ModelValidationError& e) {
            throw InputError(e.what());
        }
        out.initial = {i0, j0};
        return out;
    }
    const auto n = field<int>(doc, "n");
    const auto beta = field<double>(doc, "beta");
    const auto rewards = field<std::vector<double>>(doc, "rewards");
    if (n < 1) throw InputError("n must be at least 1");
    if (doc.contains("dense") == doc.contains("sparse")) throw InputError("exactly one of 'dense' or 'sparse' is required");
    if (doc.contains("dense")) {
        const auto rows = field<std::vector<std::vector<double>>>(doc, "dense");
        if (rows.size() != static_cast<std::size_t>(n)) throw InputError("'dense' must have n rows");
        BanditModel m;
        m.n = n;
        m.beta = beta;
        m.rewards = rewards;
        for (const auto& row : rows) {
            if (row.size() != static_cast<std::size_t>(n)) throw InputError("'dense' rows must have n entries");
            m.transitions.insert(m.transitions.end(), row.begin(), row.end());
        }
        try {
            validate_model(m);
        } catch (const ModelValidationError& e) {
            throw InputError(e.what());
        }
        out.dense = std::move(m);
    } else {
        SparseBanditModel m;
        m.n = n;
        m.beta = beta;
        m.rewards = rewards;
        m.rows.resize(static_cast<std::size_t>(n));
        const auto& triplets = doc.at("sparse");
        if (!triplets.is_array()) throw InputError("'sparse' must be an array of {row, col, p}");
        for (const auto& t : triplets) {
            const auto row = field<int>(t, "row");
            const auto col = field<int>(t, "col");
            const auto p = field<double>(t, "p");
            if (row < 0 || row >= n || col < 0 || col >= n) throw InputError("sparse entry outside the n x n matrix");
            m.rows[static_cast<std::size_t>(row)].push_back({col, p});
        }
        for (auto& row : m.rows) {
            std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
            for (std::size_t k = 1; k < row.size(); ++k)
                if (row[k].to == row[k - 1].to) throw InputError("duplicate sparse entry");
        }
        try {
            validate_model(m);
        } catch (const ModelValidationError& e) {
            throw InputError(e.what());
        }
        out.sparse = std::move(m);
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ModelInput load_model(const fs::path& path) {
    return parse_model(parse_text(read_file(path), path));
}

FhmabInstance parse_instance(const json& doc) {
    if (!doc.is_object()) throw InputError("instance must be a JSON object");
    FhmabInstance inst;
    inst.horizon = field<int>(doc, "horizon");
    inst.max_engaged = doc.contains("K") ? field<int>(doc, "K") : 1;
    const auto rule = doc.contains("rule") ? field<std::string>(doc, "rule") : std::string("exactly_one");
    if (rule == "exactly_one") inst.rule = EngagementRule::ExactlyOne;
    else if (rule == "at_most_k") inst.rule = EngagementRule::AtMostK;
    else throw InputError("unknown engagement rule '" + rule + "'");
    if (!doc.contains("projects") || !doc.at("projects").is_array()) throw InputError("missing 'projects' array");
    for (const auto& p : doc.at("projects")) {
        const auto model = parse_model(p);
        if (model.is_countable()) throw InputError("policy projects must be finite models");
        inst.projects.push_back(model.as_dense());
    }
    inst.initial = doc.contains("initial") ? field<std::vector<int>>(doc, "initial") : std::vector<int>(inst.projects.size(), 0);
    try {
        validate_instance(inst);
    } catch (const std::logic_error& e) {
        throw InputError(e.what());
    } catch (const ModelValidationError& e) {
        throw InputError(e.what());
    }
    return inst;
}

std::vector<FhmabInstance> load_instances(const fs::path& path) {
    const auto doc = parse_text(read_file(path), path);
    std::vector<FhmabInstance> out;
    if (doc.is_object() && doc.contains("instances")) {
        for (const auto& item : doc.at("instances")) out.push_back(parse_instance(item));
        if (out.empty()) throw InputError("'instances' is empty");
    } else {
        out.push_back(parse_instance(doc));
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream out;
    for (unsigned int k = 0; k < length; ++k) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[k]);
    return out.str();
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string index_csv(const IndexTable& table) {
    std::string out = "d,i,lambda\n";
    for (int d = 1; d <= table.horizon(); ++d)
        for (int i = 0; i < table.size(d); ++i) out += std::to_string(d) + "," + std::to_string(i) + "," + format_double(table.at(d, i)) + "\n";
    return out;
}

std::string order_csv(const IndexTable& table) {
    std::string out = "k,s,i,lambda\n";
    for (std::size_t k = 0; k < table.order().size(); ++k) {
        const auto& e = table.order()[k];
        out += std::to_string(k + 1) + "," + std::to_string(e.s) + "," + std::to_string(e.i) + "," + format_double(e.lambda) + "\n";
    }
    return out;
}

std::string calibration_csv(const IndexTable& table) {
    std::string out = "d,i,lambda_hat\n";
    for (int d = 1; d <= table.horizon(); ++d)
        for (int i = 0; i < table.size(d); ++i) out += std::to_string(d) + "," + std::to_string(i) + "," + format_double(table.at(d, i)) + "\n";
    return out;
}

std::string keyed_index_csv(const IndexTable& table, const CountableModelSpec& spec) {
    std::string out = "d,i_key,lambda\n";
    for (int d = 1; d <= table.horizon(); ++d)
        for (int i = 0; i < table.size(d); ++i)
            out += std::to_string(d) + "," + format_key(spec, table.keys()[static_cast<std::size_t>(i)]) + "," + format_double(table.at(d, i)) + "\n";
    return out;
}

std::string bench_csv(const std::vector<ScalingRecord>& records) {
    std::ostringstream out;
    out << "algo,n,T,L,seed,ops,slots,wall_ms\n";
    for (const auto& r : records)
        out << r.algo << "," << r.n << "," << r.horizon << "," << r.grid_size << "," << r.seed << "," << r.ops << "," << r.slots << ","
            << std::fixed << std::setprecision(3) << r.wall_ms << std::defaultfloat << "\n";
    return out.str();
}

json ops_json(const OpCounts& ops) {
    return {{"refresh_ops", ops.refresh_ops},
            {"rank1_ops", ops.rank1_ops},
            {"block_products", ops.block_products},
            {"block_ops", ops.block_ops},
            {"refreshes", ops.refreshes},
            {"max_refresh_ops", ops.max_refresh_ops},
            {"total_ops", ops.total()}};
}

void OutputSet::add(const std::string& name, std::string contents) {
    files_.emplace_back(name, std::move(contents));
}

void OutputSet::add_json(const std::string& name, json doc) {
    doc["manifest"] = kManifestName;
    add(name, doc.dump(2) + "\n");
}

std::vector<std::string> OutputSet::names() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.first);
    return out;
}

void OutputSet::write(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, contents] : files_) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw InputError("cannot write '" + (dir / name).string() + "'");
        out << contents;
    }
}

void Manifest::attach(OutputSet& outputs) const {
    json doc;
    doc["subcommand"] = subcommand;
    doc["args"] = args;
    doc["seed"] = seed;
    doc["version"] = version();
    doc["prng"] = kPrngName;
    doc["inputs"] = json::array();
    for (const auto& p : inputs) doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_hex(read_file(p))}});
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    doc["timestamp"] = stamp;
    doc["outputs"] = outputs.names();
    outputs.add(kManifestName, doc.dump(2) + "\n");
}

const char* version() {
    return APINDEX_VERSION;
}

}  // namespace apindex::io
