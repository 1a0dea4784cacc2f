#include "mred/io_cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <system_error>

#include "CLI11.hpp"
#include "json.hpp"

namespace mred {
namespace {

using nlohmann::json;

constexpr const char* kKnownKeys[] = {
    "hosts",      "steps",    "seed",         "gateway",
    "minth",      "maxth",    "maxp",         "w_q",
    "use_count_correction",   "n_states",     "dt",
    "substeps",   "service_rate",             "host_activation_prob",
};

bool is_known_key(const std::string& key) {
    for (const char* k : kKnownKeys)
        if (key == k) return true;
    return false;
}

double get_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number())
        throw ConfigValidationError(std::string(key) + ": expected a number");
    return v.get<double>();
}

long get_integer(const json& j, const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigValidationError(std::string(key) + ": expected an integer");
    return v.get<long>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw ConfigValidationError(std::string(key) + ": expected a boolean");
    return v.get<bool>();
}

GatewayKind parse_gateway_kind(const std::string& name) {
    if (name == "red") return GatewayKind::kRed;
    if (name == "mred") return GatewayKind::kMred;
    throw ConfigValidationError("gateway: expected \"red\" or \"mred\", got \"" +
                                name + "\"");
}

SimConfig config_from_json(const json& j) {
    if (!j.is_object())
        throw ConfigValidationError("config root: expected a JSON object");
    for (const auto& item : j.items())
        if (!is_known_key(item.key()))
            throw ConfigValidationError("unknown config key: " + item.key());

    SimConfig cfg;
    if (j.contains("hosts")) {
        const json& hosts = j.at("hosts");
        if (!hosts.is_array())
            throw ConfigValidationError("hosts: expected an array of integers");
        cfg.hosts.clear();
        for (const json& h : hosts) {
            if (!h.is_number_integer())
                throw ConfigValidationError(
                    "hosts: expected an array of integers");
            cfg.hosts.push_back(HostSpec{h.get<int>()});
        }
    }
    cfg.steps = get_integer(j, "steps", cfg.steps);
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_integer())
            throw ConfigValidationError("seed: expected an integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    if (j.contains("gateway")) {
        const json& v = j.at("gateway");
        if (!v.is_string())
            throw ConfigValidationError("gateway: expected a string");
        cfg.gateway = parse_gateway_kind(v.get<std::string>());
    }
    cfg.red.minth = get_number(j, "minth", cfg.red.minth);
    cfg.red.maxth = get_number(j, "maxth", cfg.red.maxth);
    cfg.red.maxp = get_number(j, "maxp", cfg.red.maxp);
    cfg.red.w_q = get_number(j, "w_q", cfg.red.w_q);
    cfg.red.use_count_correction =
        get_bool(j, "use_count_correction", cfg.red.use_count_correction);
    cfg.n_states = static_cast<int>(get_integer(j, "n_states", cfg.n_states));
    cfg.dt = get_number(j, "dt", cfg.dt);
    cfg.substeps = static_cast<int>(get_integer(j, "substeps", cfg.substeps));
    cfg.service_rate =
        static_cast<int>(get_integer(j, "service_rate", cfg.service_rate));
    cfg.host_activation_prob =
        get_number(j, "host_activation_prob", cfg.host_activation_prob);

    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigValidationError(e.what());
    }
    return cfg;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void append_long(std::string& out, long v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

std::vector<std::string> preset_names() { return {"network1", "network2"}; }

SimConfig preset_config(const std::string& name) {
    SimConfig cfg;
    if (name == "network1") {
        cfg.hosts = {{2}, {3}, {2}, {1}, {6}, {4}};
    } else if (name == "network2") {
        cfg.hosts = {{14}, {7}, {4}, {5}, {12}, {3}};
    } else {
        throw ConfigFileError("unknown preset \"" + name +
                              "\" (available: network1, network2)");
    }
    return cfg;
}

SimConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(std::string("malformed config JSON: ") +
                               e.what());
    }
    return config_from_json(j);
}

SimConfig parse_config(const std::string& path_or_preset) {
    std::error_code ec;
    if (std::filesystem::exists(path_or_preset, ec)) {
        std::ifstream in(path_or_preset);
        if (!in)
            throw ConfigFileError("cannot read config file: " + path_or_preset);
        std::ostringstream text;
        text << in.rdbuf();
        return parse_config_text(text.str());
    }
    for (const std::string& name : preset_names())
        if (path_or_preset == name) return preset_config(name);
    throw ConfigFileError("config file not found: " + path_or_preset +
                          " (not a preset name either; presets: network1, "
                          "network2)");
}

std::string config_to_json_text(const SimConfig& cfg) {
    json j;
    json hosts = json::array();
    for (const HostSpec& h : cfg.hosts) hosts.push_back(h.rate);
    j["hosts"] = hosts;
    j["steps"] = cfg.steps;
    j["seed"] = cfg.seed;
    j["gateway"] = cfg.gateway == GatewayKind::kRed ? "red" : "mred";
    j["minth"] = cfg.red.minth;
    j["maxth"] = cfg.red.maxth;
    j["maxp"] = cfg.red.maxp;
    j["w_q"] = cfg.red.w_q;
    j["use_count_correction"] = cfg.red.use_count_correction;
    j["n_states"] = cfg.n_states;
    j["dt"] = cfg.dt;
    j["substeps"] = cfg.substeps;
    j["service_rate"] = cfg.service_rate;
    j["host_activation_prob"] = cfg.host_activation_prob;
    return j.dump(2);
}

void write_step_csv(const SimStats& stats, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);

    std::string buffer;
    buffer.reserve(stats.records.size() * 40 + 64);
    buffer += "step,arrivals,drops,overflow_drops,queue_len,avg\n";
    for (const StepRecord& rec : stats.records) {
        append_long(buffer, rec.step);
        buffer += ',';
        append_long(buffer, rec.arrivals);
        buffer += ',';
        append_long(buffer, rec.drops);
        buffer += ',';
        append_long(buffer, rec.overflow_drops);
        buffer += ',';
        append_long(buffer, rec.queue_len_end);
        buffer += ',';
        buffer += format_double(rec.avg_end);
        buffer += '\n';
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

CompareResult compare_runs(const SimConfig& base, std::uint64_t seed) {
    SimConfig cfg = base;
    cfg.seed = seed;

    CompareResult result;
    result.seed = seed;
    cfg.gateway = GatewayKind::kRed;
    result.red_stats = run(cfg);
    cfg.gateway = GatewayKind::kMred;
    result.mred_stats = run(cfg);
    result.utilisation_diff =
        result.red_stats.utilisation - result.mred_stats.utilisation;
    return result;
}

void print_run_summary(std::ostream& out, const SimConfig& config,
                       const SimStats& stats) {
    out << "gateway=" << (config.gateway == GatewayKind::kRed ? "red" : "mred")
        << '\n'
        << "seed=" << config.seed << '\n'
        << "steps=" << config.steps << '\n'
        << "total_traffic=" << stats.total_traffic << '\n'
        << "total_drops=" << stats.total_drops << '\n'
        << "marked_drops=" << stats.marked_drops << '\n'
        << "overflow_drops=" << stats.overflow_drops << '\n'
        << "utilisation=" << format_double(stats.utilisation) << '\n';
}

void print_compare_summary(std::ostream& out, const CompareResult& result) {
    out << "label_a=red\n"
        << "label_b=mred\n"
        << "seed=" << result.seed << '\n';
    const auto emit = [&out](const char* label, const SimStats& stats) {
        out << label << ".total_traffic=" << stats.total_traffic << '\n'
            << label << ".total_drops=" << stats.total_drops << '\n'
            << label << ".marked_drops=" << stats.marked_drops << '\n'
            << label << ".overflow_drops=" << stats.overflow_drops << '\n'
            << label << ".utilisation=" << format_double(stats.utilisation)
            << '\n';
    };
    emit("red", result.red_stats);
    emit("mred", result.mred_stats);
    out << "utilisation_diff=" << format_double(result.utilisation_diff)
        << '\n';
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Gateway queue-management simulator: classic RED and "
                 "master-equation RED (mRED)"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::optional<long> steps_flag;
    std::optional<std::string> gateway_flag;
    std::optional<std::string> out_path;
    std::optional<std::string> out_prefix;

    CLI::App* run_cmd =
        app.add_subcommand("run", "Run one simulation and print a summary");
    run_cmd->add_option("--config", config_path,
                        "Config JSON file or preset name (network1, network2)")
        ->required();
    run_cmd->add_option("--seed", seed_flag, "Override the run seed");
    run_cmd->add_option("--steps", steps_flag, "Override the step count");
    run_cmd->add_option("--gateway", gateway_flag, "Gateway kind: red | mred")
        ->check(CLI::IsMember({"red", "mred"}));
    run_cmd->add_option("--out", out_path, "Write the per-step CSV here");

    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "Run the same traffic under RED and mRED, same seed");
    compare_cmd
        ->add_option("--config", config_path,
                     "Config JSON file or preset name (network1, network2)")
        ->required();
    compare_cmd->add_option("--seed", seed_flag, "Override the run seed");
    compare_cmd->add_option("--out-prefix", out_prefix,
                            "Write <prefix>_red.csv and <prefix>_mred.csv");

    CLI::App* presets_cmd =
        app.add_subcommand("presets", "List the bundled preset configs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }

    try {
        if (presets_cmd->parsed()) {
            for (const std::string& name : preset_names()) {
                std::cout << name << ":\n"
                          << config_to_json_text(preset_config(name)) << "\n";
            }
            return 0;
        }

        SimConfig cfg = parse_config(config_path);
        if (seed_flag) cfg.seed = *seed_flag;
        if (steps_flag) cfg.steps = *steps_flag;

        if (run_cmd->parsed()) {
            if (gateway_flag) cfg.gateway = parse_gateway_kind(*gateway_flag);
            const SimStats stats = run(cfg);
            if (out_path) write_step_csv(stats, *out_path);
            print_run_summary(std::cout, cfg, stats);
            return 0;
        }

        // compare
        const CompareResult result = compare_runs(cfg, cfg.seed);
        if (out_prefix) {
            write_step_csv(result.red_stats, *out_prefix + "_red.csv");
            write_step_csv(result.mred_stats, *out_prefix + "_mred.csv");
        }
        print_compare_summary(std::cout, result);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mred
