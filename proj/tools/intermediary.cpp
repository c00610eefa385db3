// intermediary: generate instances, run experiments, sweep grids, check
// concentration bounds and compute exact expectations.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "intermediation/algorithms.hpp"
#include "intermediation/harness.hpp"
#include "intermediation/io.hpp"

using namespace intermed;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

using Entries = std::vector<std::pair<std::string, std::string>>;

struct Options {
    std::string config_path;
    std::string out;
    std::string format = "csv";
    bool force = false;
    int threads = 0;
    std::optional<std::uint64_t> seed;

    // instance source
    std::string instance_path;
    std::string family = "uniform";
    std::size_t n = 100;
    std::size_t z = 0;
    double cv = 1.0;
    double gap = 0.1;
    double gap2 = 0.2;

    // algorithm
    std::string algo = "gft_online";
    std::string objective = "gft";
    std::size_t trials = 1000;
    double c = 0.3;
    double eps = 0.2758;
    std::size_t big_n = 114;
    double secretary_prob = 0.5;
    bool truthful_sampling = false;
    bool idle_free_item = false;
    std::optional<double> keep_frac;
    std::optional<std::size_t> sample_len;
    std::string dump_log;

    // sweep axes
    std::vector<std::size_t> ns;
    std::vector<std::size_t> zs;
    std::vector<double> cs;
    std::vector<double> epss;
    std::vector<std::size_t> big_ns;

    // verify
    std::string claim;
    std::size_t population = 1000;
    std::size_t ones = 500;
    std::optional<std::size_t> draws;
    std::size_t n_max = 4;
};

std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("INTERMEDIARY_SEED")) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::BadParams, "INTERMEDIARY_SEED must be an unsigned integer");
    }
    return 1;
}

InstanceFamily family_of(const Options& o, std::uint64_t seed) {
    return {parse_family(o.family), o.n, seed, o.z, o.cv, o.gap, o.gap2};
}

struct LoadedInstance {
    Instance inst;
    std::string id;
};

LoadedInstance load_instance(const Options& o, std::uint64_t seed) {
    if (!o.instance_path.empty()) {
        return {read_instance_file(o.instance_path),
                "file:" + std::filesystem::path(o.instance_path).filename().string()};
    }
    const InstanceFamily fam = family_of(o, seed);
    return {generate(fam), family_label(fam)};
}

AlgoParams algo_params(const Options& o) {
    AlgoParams p;
    p.welfare.sample_len = o.sample_len;
    p.welfare.truthful_sampling = o.truthful_sampling;
    p.gft.c = o.c;
    p.gft.eps = o.eps;
    p.gft.big_n = o.big_n;
    p.gft.secretary_prob = o.secretary_prob;
    p.gft.idle_free_item = o.idle_free_item;
    p.gft.keep_fraction = o.keep_frac;
    return p;
}

Entries instance_entries(const Options& o) {
    if (!o.instance_path.empty()) return {{"instance", o.instance_path}};
    Entries e{{"family", o.family}, {"n", std::to_string(o.n)}};
    const FamilyKind kind = parse_family(o.family);
    if (kind == FamilyKind::FewTrades) e.emplace_back("z", std::to_string(o.z));
    if (kind == FamilyKind::ImpossibilityPairA || kind == FamilyKind::ImpossibilityPairB) {
        e.emplace_back("cv", format_number(o.cv));
        e.emplace_back("gap", format_number(o.gap));
        if (kind == FamilyKind::ImpossibilityPairB) e.emplace_back("gap2", format_number(o.gap2));
    }
    return e;
}

Entries algo_entries(const Options& o) {
    Entries e{{"algo", o.algo}};
    const AlgoId id = parse_algo(o.algo);
    if (id == AlgoId::WelfareOnline) {
        if (o.sample_len) e.emplace_back("sample_len", std::to_string(*o.sample_len));
        e.emplace_back("truthful_sampling", o.truthful_sampling ? "true" : "false");
    }
    if (id == AlgoId::GftOnline) {
        e.emplace_back("c", format_number(o.c));
        e.emplace_back("eps", format_number(o.eps));
        e.emplace_back("bigN", std::to_string(o.big_n));
        e.emplace_back("secretary_prob", format_number(o.secretary_prob));
        e.emplace_back("idle_free_item", o.idle_free_item ? "true" : "false");
        if (o.keep_frac) e.emplace_back("keep_frac", format_number(*o.keep_frac));
    }
    return e;
}

/// "# key=value" lines describing the effective config.
std::string csv_header(const std::string& command, const Options& o, const Entries& entries) {
    std::ostringstream os;
    os << "# intermediary " << command << '\n';
    if (!o.config_path.empty()) os << "# config_file=" << o.config_path << '\n';
    for (const auto& [k, v] : entries) os << "# " << k << '=' << v << '\n';
    return os.str();
}

json config_json(const std::string& command, const Options& o, const Entries& entries) {
    json cfg = json::object();
    cfg["command"] = command;
    if (!o.config_path.empty()) cfg["config_file"] = o.config_path;
    for (const auto& [k, v] : entries) cfg[k] = v;
    return cfg;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    if (std::filesystem::exists(o.out) && !o.force) {
        throw Error(ErrorCode::BadParams, "output file " + o.out + " exists; pass --force to overwrite");
    }
    std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::BadParams, "cannot write " + o.out);
    file << text;
}

void require_format(const Options& o) {
    if (o.format != "csv" && o.format != "json") {
        throw Error(ErrorCode::BadParams, "format must be csv or json");
    }
}

// ------------------------------------------------------------------ commands

int cmd_generate(const Options& o) {
    const std::uint64_t seed = resolve_seed(o);
    const Instance inst = generate(family_of(o, seed));
    emit(o, instance_to_json(inst).dump() + "\n");
    return kExitOk;
}

constexpr const char* kRunColumns = "instance_id,algo,objective,trials,mean,ci95,benchmark,ratio,seed";

struct RunRow {
    std::string instance_id;
    std::string algo;
    std::string objective;
    RatioReport report;
    std::uint64_t seed = 0;
    Entries extra;
};

std::string csv_row(const RunRow& r) {
    std::ostringstream os;
    os << r.instance_id << ',' << r.algo << ',' << r.objective << ',' << r.report.trials << ','
       << format_number(r.report.algo_mean) << ',' << format_number(r.report.algo_ci95) << ','
       << format_number(r.report.benchmark) << ',' << format_number(r.report.ratio) << ',' << r.seed;
    for (const auto& [k, v] : r.extra) os << ',' << v;
    return os.str();
}

json json_row(const RunRow& r) {
    json j = {{"instance_id", r.instance_id}, {"algo", r.algo},          {"objective", r.objective},
              {"trials", r.report.trials},    {"mean", r.report.algo_mean}, {"ci95", r.report.algo_ci95},
              {"benchmark", r.report.benchmark}, {"ratio", r.report.ratio}, {"seed", r.seed}};
    for (const auto& [k, v] : r.extra) j[k] = v;
    return j;
}

std::string render_rows(const std::string& command, const Options& o, const Entries& entries,
                        const std::vector<RunRow>& rows) {
    if (o.format == "json") {
        json out = {{"config", config_json(command, o, entries)}, {"rows", json::array()}};
        for (const RunRow& r : rows) out["rows"].push_back(json_row(r));
        return out.dump(2) + "\n";
    }
    std::string text = csv_header(command, o, entries) + kRunColumns;
    if (!rows.empty()) {
        for (const auto& [k, v] : rows.front().extra) text += "," + k;
    }
    text += '\n';
    for (const RunRow& r : rows) text += csv_row(r) + '\n';
    return text;
}

int cmd_run(const Options& o) {
    require_format(o);
    const std::uint64_t seed = resolve_seed(o);
    const AlgoId id = parse_algo(o.algo);
    const Objective objective = parse_objective(o.objective);
    const LoadedInstance loaded = load_instance(o, seed);
    const AlgoParams params = algo_params(o);

    Entries entries = instance_entries(o);
    for (auto& e : algo_entries(o)) entries.push_back(std::move(e));
    entries.emplace_back("objective", o.objective);
    entries.emplace_back("trials", std::to_string(o.trials));
    entries.emplace_back("seed", std::to_string(seed));

    const RatioReport report = estimate_ratio(loaded.inst, id, params, objective, o.trials, seed);
    emit(o, render_rows("run", o, entries, {{loaded.id, o.algo, o.objective, report, seed, {}}}));

    if (!o.dump_log.empty()) {
        if (std::filesystem::exists(o.dump_log) && !o.force) {
            throw Error(ErrorCode::BadParams, "log file " + o.dump_log + " exists; pass --force to overwrite");
        }
        std::ofstream log_file(o.dump_log, std::ios::binary | std::ios::trunc);
        if (!log_file) throw Error(ErrorCode::BadParams, "cannot write " + o.dump_log);
        log_file << trade_log_to_json(run_trial_log(loaded.inst, id, params, seed, 0)).dump() << '\n';
    }
    return kExitOk;
}

template <class T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (const T& v : values) {
        if (!out.empty()) out += ' ';
        if constexpr (std::is_floating_point_v<T>) {
            out += format_number(v);
        } else {
            out += std::to_string(v);
        }
    }
    return out;
}

int cmd_sweep(const Options& o) {
    require_format(o);
    if (!o.instance_path.empty()) throw Error(ErrorCode::BadParams, "sweep generates its instances; drop --instance");
    if (o.ns.empty() && o.zs.empty() && o.cs.empty() && o.epss.empty() && o.big_ns.empty()) {
        throw Error(ErrorCode::BadParams, "empty grid: give at least one of --ns, --zs, --cs, --epss, --bigNs");
    }
    const std::uint64_t seed = resolve_seed(o);
    const AlgoId id = parse_algo(o.algo);
    const Objective objective = parse_objective(o.objective);
    parse_family(o.family);

    const std::vector<std::size_t> ns = o.ns.empty() ? std::vector<std::size_t>{o.n} : o.ns;
    const std::vector<std::size_t> zs = o.zs.empty() ? std::vector<std::size_t>{o.z} : o.zs;
    const std::vector<double> cs = o.cs.empty() ? std::vector<double>{o.c} : o.cs;
    const std::vector<double> epss = o.epss.empty() ? std::vector<double>{o.eps} : o.epss;
    const std::vector<std::size_t> big_ns = o.big_ns.empty() ? std::vector<std::size_t>{o.big_n} : o.big_ns;

    Entries entries = instance_entries(o);
    for (auto& e : algo_entries(o)) entries.push_back(std::move(e));
    entries.emplace_back("objective", o.objective);
    entries.emplace_back("trials", std::to_string(o.trials));
    entries.emplace_back("seed", std::to_string(seed));
    entries.emplace_back("grid_n", join(ns));
    entries.emplace_back("grid_z", join(zs));
    entries.emplace_back("grid_c", join(cs));
    entries.emplace_back("grid_eps", join(epss));
    entries.emplace_back("grid_bigN", join(big_ns));

    std::vector<RunRow> rows;
    for (std::size_t n : ns) {
        for (std::size_t z : zs) {
            Options cell = o;
            cell.n = n;
            cell.z = z;
            const LoadedInstance loaded = load_instance(cell, seed);
            for (double c : cs) {
                for (double eps : epss) {
                    for (std::size_t big_n : big_ns) {
                        cell.c = c;
                        cell.eps = eps;
                        cell.big_n = big_n;
                        const RatioReport report =
                            estimate_ratio(loaded.inst, id, algo_params(cell), objective, o.trials, seed);
                        rows.push_back({loaded.id, o.algo, o.objective, report, seed,
                                        {{"n", std::to_string(n)},
                                         {"z", std::to_string(z)},
                                         {"c", format_number(c)},
                                         {"eps", format_number(eps)},
                                         {"bigN", std::to_string(big_n)}}});
                    }
                }
            }
        }
    }
    emit(o, render_rows("sweep", o, entries, rows));
    return kExitOk;
}

int cmd_verify(const Options& o) {
    require_format(o);
    const std::uint64_t seed = resolve_seed(o);
    Entries entries{{"claim", o.claim}, {"trials", std::to_string(o.trials)}, {"seed", std::to_string(seed)}};
    ConcentrationReport r;
    if (o.claim == "lemma1") {
        const std::size_t draws = o.draws.value_or(100);
        r = verify_lemma1(o.population, o.ones, draws, o.eps, o.trials, seed);
    } else if (o.claim == "lemma2") {
        r = verify_lemma2(o.n, o.trials, seed);
    } else if (o.claim == "lemma4") {
        r = verify_lemma4(o.n, o.trials, seed, o.draws);
    } else if (o.claim == "lemma5") {
        r = lemma5_report(o.n_max);
        entries = {{"claim", o.claim}};
    } else if (o.claim == "well_mixed") {
        for (auto& e : instance_entries(o)) entries.push_back(std::move(e));
        const LoadedInstance loaded = load_instance(o, seed);
        r = estimate_well_mixed(loaded.inst, o.c, o.eps, o.trials, seed);
    } else if (o.claim == "impossibility") {
        const AlgoId id = parse_algo(o.algo);
        for (auto& e : algo_entries(o)) entries.push_back(std::move(e));
        entries.emplace_back("cv", format_number(o.cv));
        entries.emplace_back("gap", format_number(o.gap));
        entries.emplace_back("n", std::to_string(o.n));
        const ImpossibilityResult res =
            demonstrate_impossibility(o.cv, o.gap, o.trials, seed, id, algo_params(o), o.n);
        r.claim = "impossibility";
        r.parameters = {{"cv", o.cv},          {"eps", o.gap},          {"eps_prime", res.eps_prime},
                        {"p_hat", res.p_hat},  {"gft_a", res.gft_a},    {"offline_a", res.offline_a},
                        {"offline_b", res.offline_b}};
        r.empirical = res.gft_b;
        r.bound = 0.5 * res.offline_b;
        r.trials = res.trials;
        r.pass = res.gft_b <= r.bound;
        if (res.eps_prime_clamped) r.note = "eps_prime clamped";
    } else {
        throw Error(ErrorCode::BadParams,
                    "unknown claim '" + o.claim + "'; expected lemma1, lemma2, lemma4, lemma5, well_mixed or impossibility");
    }

    if (o.format == "json") {
        json out = {{"config", config_json("verify", o, entries)}, {"report", report_to_json(r)}};
        emit(o, out.dump(2) + "\n");
    } else {
        emit(o, csv_header("verify", o, entries) + kReportCsvHeader + "\n" + report_csv_row(r) + "\n");
    }
    return r.pass ? kExitOk : kExitFail;
}

int cmd_exact(const Options& o) {
    require_format(o);
    const std::uint64_t seed = resolve_seed(o);
    const AlgoId id = parse_algo(o.algo);
    const LoadedInstance loaded = load_instance(o, seed);
    const ExactExpectation e = exact_expectation(loaded.inst, id, algo_params(o));
    Entries entries = instance_entries(o);
    for (auto& x : algo_entries(o)) entries.push_back(std::move(x));
    if (o.instance_path.empty()) entries.emplace_back("seed", std::to_string(seed));

    if (o.format == "json") {
        json out = {{"config", config_json("exact", o, entries)},
                    {"result",
                     {{"instance_id", loaded.id},
                      {"algo", o.algo},
                      {"exp_welfare", e.welfare},
                      {"exp_gft", e.gft},
                      {"exp_trades", e.trades}}}};
        emit(o, out.dump(2) + "\n");
    } else {
        emit(o, csv_header("exact", o, entries) + "instance_id,algo,exp_welfare,exp_gft,exp_trades\n" + loaded.id +
                    ',' + o.algo + ',' + format_number(e.welfare) + ',' + format_number(e.gft) + ',' +
                    format_number(e.trades) + '\n');
    }
    return kExitOk;
}

// ------------------------------------------------------------------ parsing

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config_path, "JSON config file; flags override its keys");
    sub->add_option("--seed", o.seed, "Seed (falls back to INTERMEDIARY_SEED, then 1)");
    sub->add_option("--out", o.out, "Output path (default stdout)");
    sub->add_flag("--force", o.force, "Overwrite an existing output file");
    sub->add_option("--threads", o.threads, "Worker thread cap (default all cores)");
}

void add_format(CLI::App* sub, Options& o) {
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

void add_instance(CLI::App* sub, Options& o, bool allow_file) {
    if (allow_file) sub->add_option("--instance", o.instance_path, "Instance JSON file (instead of --family)");
    sub->add_option("--family", o.family,
                    "uniform, bimodal, fewtrades, heavybuyer, impossibility_a, impossibility_b");
    sub->add_option("--n", o.n, "Agents per side");
    sub->add_option("--z", o.z, "Optimal trade count for fewtrades");
    sub->add_option("--cv", o.cv, "First seller value of the impossibility pairs");
    sub->add_option("--gap", o.gap, "eps of the impossibility pairs");
    sub->add_option("--gap2", o.gap2, "eps' of impossibility_b");
}

void add_algo(CLI::App* sub, Options& o) {
    sub->add_option("--algo", o.algo,
                    "welfare_online, gft_online, secretary_only, sequential_offline, greedy_all");
    sub->add_option("--c", o.c, "gft_online sampling fraction");
    sub->add_option("--eps", o.eps, "gft_online slack");
    sub->add_option("--bigN", o.big_n, "gft_online detection threshold");
    sub->add_option("--secretary-prob", o.secretary_prob, "gft_online secretary coin");
    sub->add_flag("--idle-free-item", o.idle_free_item, "gft_online holds the free item until sell-off");
    sub->add_option("--keep-frac", o.keep_frac, "gft_online kept fraction of the sampled matching");
    sub->add_option("--sample-len", o.sample_len, "welfare_online sample length");
    sub->add_flag("--truthful-sampling", o.truthful_sampling, "welfare_online offers the running seller maximum");
}

/// Applies keys of the --config JSON file to options not given as flags.
void apply_config(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::BadParams, "cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception&) {
        throw Error(ErrorCode::BadParams, "invalid JSON in config file " + path);
    }
    if (!doc.is_object()) throw Error(ErrorCode::BadParams, "config file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (key == "config") continue;
        CLI::Option* opt = nullptr;
        try {
            opt = sub->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw Error(ErrorCode::BadParams, "unknown config key '" + key + "'");
        }
        if (opt->count() > 0) continue;
        std::vector<std::string> items;
        const auto scalar = [](const json& v) {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
            if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
            if (v.is_number()) return format_number(v.get<double>());
            throw Error(ErrorCode::BadParams, "config values must be scalars or arrays of scalars");
        };
        if (value.is_array()) {
            for (const json& v : value) items.push_back(scalar(v));
        } else {
            items.push_back(scalar(value));
        }
        for (const std::string& item : items) opt->add_result(item);
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online intermediation experiments"};
    app.require_subcommand(1);
    Options o;

    CLI::App* gen = app.add_subcommand("generate", "Write an instance as JSON");
    add_common(gen, o);
    add_instance(gen, o, false);

    CLI::App* run = app.add_subcommand("run", "Estimate an algorithm's ratio against its benchmark");
    add_common(run, o);
    add_format(run, o);
    add_instance(run, o, true);
    add_algo(run, o);
    run->add_option("--objective", o.objective, "welfare or gft");
    run->add_option("--trials", o.trials, "Monte Carlo trials");
    run->add_option("--dump-log", o.dump_log, "Write the trade log of trial 0 as JSON");

    CLI::App* sweep = app.add_subcommand("sweep", "Run over a Cartesian grid, one row per cell");
    add_common(sweep, o);
    add_format(sweep, o);
    add_instance(sweep, o, false);
    add_algo(sweep, o);
    sweep->add_option("--objective", o.objective, "welfare or gft");
    sweep->add_option("--trials", o.trials, "Monte Carlo trials per cell");
    sweep->add_option("--ns", o.ns, "Grid over n")->delimiter(',');
    sweep->add_option("--zs", o.zs, "Grid over z")->delimiter(',');
    sweep->add_option("--cs", o.cs, "Grid over c")->delimiter(',');
    sweep->add_option("--epss", o.epss, "Grid over eps")->delimiter(',');
    sweep->add_option("--bigNs", o.big_ns, "Grid over N")->delimiter(',');

    CLI::App* verify = app.add_subcommand("verify", "Check a lemma bound by simulation; exit 1 on failure");
    add_common(verify, o);
    add_format(verify, o);
    add_instance(verify, o, true);
    add_algo(verify, o);
    verify->add_option("claim", o.claim, "lemma1, lemma2, lemma4, lemma5, well_mixed, impossibility")->required();
    verify->add_option("--trials", o.trials, "Simulation trials");
    verify->add_option("--N", o.population, "lemma1 population size");
    verify->add_option("--m", o.ones, "lemma1 number of ones");
    verify->add_option("--draws", o.draws, "lemma1/lemma4 draws");
    verify->add_option("--nmax", o.n_max, "lemma5 largest n");

    CLI::App* exact = app.add_subcommand("exact", "Exact expectation over all arrival orders (2n <= 8)");
    add_common(exact, o);
    add_format(exact, o);
    add_instance(exact, o, true);
    add_algo(exact, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::cerr << "error: Usage: " << msg << '\n';
        return kExitUsage;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (!o.config_path.empty()) apply_config(active, o.config_path);
        set_thread_count(o.threads);
        if (active == gen) return cmd_generate(o);
        if (active == run) return cmd_run(o);
        if (active == sweep) return cmd_sweep(o);
        if (active == verify) return cmd_verify(o);
        return cmd_exact(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: Usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return kExitUsage;
    }
}
