// evsurv: simulate, train, eval, protocol.
//
// Exit codes: 0 ok, 2 bad input, 3 numeric failure. A one-line JSON status
// goes to stderr when a command finishes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evsurv/dataset.hpp"
#include "evsurv/metrics.hpp"
#include "evsurv/model.hpp"
#include "evsurv/protocol.hpp"
#include "evsurv/simulate.hpp"
#include "evsurv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evsurv;

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json g_status = json::object();

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw InputError("cannot open '" + p.string() + "' for writing");
    return os;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InputError("cannot create directory '" + dir + "'");
}

TrainConfig load_config(const std::string& path) {
    TrainConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream is(path);
    if (!is) throw InputError("cannot open config '" + path + "'");
    try {
        json j = json::parse(is);
        cfg = j.get<TrainConfig>();
    } catch (const json::exception& e) {
        throw InputError(std::string("bad config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("bad config: ") + e.what());
    }
    try {
        cfg.check();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return cfg;
}

Dataset load_data(const std::string& path) {
    try {
        return read_csv(path);
    } catch (const DataError& e) {
        throw InputError(path + ": " + e.what());
    }
}

// "feature=f0 grid=21" (spaces or commas between fields)
std::pair<std::string, std::size_t> parse_heatmap(std::string spec) {
    for (char& c : spec)
        if (c == ',') c = ' ';
    std::istringstream in(spec);
    std::string tok, feature;
    std::size_t grid = 21;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw InputError("bad --heatmap field '" + tok + "'");
        const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "feature") feature = val;
        else if (key == "grid") {
            try {
                grid = std::stoul(val);
            } catch (...) {
                throw InputError("bad heatmap grid '" + val + "'");
            }
        } else
            throw InputError("unknown --heatmap key '" + key + "'");
    }
    if (feature.empty()) throw InputError("--heatmap needs feature=<name>");
    return {feature, grid};
}

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& given, std::size_t n_splits) {
    if (!given.empty()) return given;
    std::vector<std::uint64_t> s(n_splits);
    for (std::size_t i = 0; i < n_splits; ++i) s[i] = i;
    return s;
}

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string kind = "lph";
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    double censor = 0.0;
    std::optional<double> lambda0;
    std::string out = "data.csv";
};

void cmd_simulate(const SimulateArgs& a) {
    if (a.n == 0) throw InputError("--n must be positive");
    Dataset d;
    if (a.kind == "illustrative") {
        if (!(a.censor >= 0.0 && a.censor <= 1.0)) throw InputError("--censor must lie in [0, 1]");
        d = gen_illustrative(a.n, a.censor, a.seed);
    } else if (a.kind == "lph" || a.kind == "nlph") {
        const double l0 = a.lambda0.value_or(0.1);
        if (!(l0 > 0.0)) throw InputError("--lambda0 must be positive");
        d = gen_cox_exponential(a.n, a.kind == "lph" ? CoxKind::LPH : CoxKind::NLPH, l0, a.seed);
    } else if (a.kind == "nlnph") {
        const double l0 = a.lambda0.value_or(0.02);
        if (!(l0 > 0.0)) throw InputError("--lambda0 must be positive");
        d = gen_nlnph(a.n, l0, TimeVaryingLogRisk::standard(), a.seed);
    } else {
        throw InputError("unknown kind '" + a.kind + "'");
    }
    auto os = open_out(a.out);
    write_csv(d, os);
    if (!os) throw InputError("write to '" + a.out + "' failed");
    std::cout << "wrote " << d.size() << " rows to " << a.out << ", censoring rate "
              << detail::format_double(d.censoring_rate()) << '\n';
    g_status["rows"] = d.size();
    g_status["censoring_rate"] = d.censoring_rate();
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
    std::string data, train, val, test_out;
    std::string config;
    std::string model = "model.json";
    std::string history = "history.csv";
    std::uint64_t split_seed = 0;
    std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
    TrainConfig cfg = load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    Dataset tr, va;
    if (!a.train.empty() || !a.val.empty()) {
        if (a.train.empty() || a.val.empty() || !a.data.empty())
            throw InputError("give either --data or both --train and --val");
        tr = load_data(a.train);
        va = load_data(a.val);
        if (tr.feature_names != va.feature_names) throw InputError("train and validation columns differ");
    } else {
        if (a.data.empty()) throw InputError("--data is required");
        const Dataset all = load_data(a.data);
        DataSplit ds;
        try {
            ds = split_dataset(all, {0.6, 0.2, 0.2}, a.split_seed);
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        tr = std::move(ds.train);
        va = std::move(ds.val);
        if (!a.test_out.empty()) {
            auto os = open_out(a.test_out);
            write_csv(ds.test, os);
        }
    }
    const TrainResult r = train(tr, va, cfg);
    json cj = cfg;
    save_model(r.params, r.standardizer, a.model, cj, tr.feature_names);
    auto hs = open_out(a.history);
    r.history.write_csv(hs);
    std::cout << "trained K=" << r.params.K << " on " << tr.size() << " rows, " << r.history.size()
              << " epochs, best epoch " << r.history.best_epoch << ", val cost "
              << detail::format_double(r.history.val_cost[r.history.best_epoch]) << '\n';
    g_status["epochs_run"] = r.history.size();
    g_status["best_epoch"] = r.history.best_epoch;
    g_status["model"] = a.model;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string model, data, out = "eval";
    std::string mode = "mid";
    std::string heatmap;
    bool true_durations = false;
    bool grids = true;
};

void cmd_eval(const EvalArgs& a) {
    LoadedModel lm;
    try {
        lm = load_model(a.model);
    } catch (const ModelFormatError& e) {
        throw InputError(e.what());
    }
    const Dataset d = load_data(a.data);
    if (d.dim() != lm.params.p)
        throw InputError("model expects " + std::to_string(lm.params.p) + " features, data has " +
                         std::to_string(d.dim()));
    SurvivalMode mode;
    try {
        mode = parse_survival_mode(a.mode);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    if (a.true_durations && !d.has_true_durations()) throw InputError("--true-durations needs a t_true column");
    ensure_dir(a.out);
    const EvalReport rep = evaluate_model(lm.params, lm.standardizer, d, mode, true, a.true_durations);
    {
        auto os = open_out(fs::path(a.out) / "summary.csv");
        rep.write_summary_csv(os);
    }
    {
        auto os = open_out(fs::path(a.out) / "calibration.csv");
        rep.write_calibration_csv(os);
    }
    if (a.grids) {
        auto os = open_out(fs::path(a.out) / "survival.csv");
        rep.write_grid_csv(os);
    }
    if (!a.heatmap.empty()) {
        const auto [feature, grid] = parse_heatmap(a.heatmap);
        std::size_t j = d.dim();
        for (std::size_t k = 0; k < d.dim(); ++k)
            if (d.feature_names[k] == feature) j = k;
        if (j == d.dim()) throw InputError("no feature named '" + feature + "'");
        if (grid < 2) throw InputError("heatmap grid must be at least 2");
        auto os = open_out(fs::path(a.out) / ("heatmap_" + feature + ".csv"));
        survival_heatmap(lm.params, lm.standardizer, d, j, grid).write_csv(os);
    }
    const auto& s = rep.summary;
    std::cout << "mode " << to_string(s.mode) << "  n " << s.n << "  Ctd " << detail::format_double(s.ctd) << "  IBS "
              << detail::format_double(s.ibs) << "  IBLL " << detail::format_double(s.ibll) << '\n';
    g_status["ctd"] = s.ctd;
    g_status["ibs"] = s.ibs;
    g_status["ibll"] = s.ibll;
    g_status["mode"] = to_string(s.mode);
}

// --- protocol --------------------------------------------------------------

struct ProtocolArgs {
    std::string data, config, out = "protocol";
    std::size_t n_splits = 5;
    std::vector<std::uint64_t> seeds;
    std::string mode = "mid";
    bool parallel = false;
};

void cmd_protocol(const ProtocolArgs& a) {
    const TrainConfig cfg = load_config(a.config);
    const Dataset d = load_data(a.data);
    SurvivalMode mode;
    try {
        mode = parse_survival_mode(a.mode);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    const auto seeds = seed_list(a.seeds, a.n_splits);
    if (seeds.empty()) throw InputError("--n-splits must be positive");
    if (seeds.size() == 1) std::cerr << "warning: single split, standard errors reported as 0\n";
    if (d.size() < 5) throw InputError("need at least 5 records");
    ensure_dir(a.out);
    const ProtocolResult r = run_protocol(d, cfg, seeds, mode, a.parallel);
    {
        auto os = open_out(fs::path(a.out) / "splits.csv");
        r.write_splits_csv(os);
    }
    {
        auto os = open_out(fs::path(a.out) / "summary.csv");
        r.write_summary_csv(os);
    }
    std::cout << "splits " << r.splits.size() << "  mode " << to_string(mode) << '\n';
    for (auto [name, m] : {std::pair{"Ctd ", r.ctd}, {"IBS ", r.ibs}, {"IBLL", r.ibll}})
        std::cout << name << "  " << detail::format_double(m.mean) << " +/- " << detail::format_double(m.se) << '\n';
    g_status["ctd"] = {r.ctd.mean, r.ctd.se};
    g_status["ibs"] = {r.ibs.mean, r.ibs.se};
    g_status["ibll"] = {r.ibll.mean, r.ibll.se};
}

int finish(int code, const std::string& command, const std::string& message = {}) {
    json st = {{"status", code == 0 ? "ok" : "error"}, {"command", command}, {"exit_code", code}};
    if (!message.empty()) st["message"] = message;
    for (auto& [k, v] : g_status.items()) st[k] = v;
    std::cerr << st.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evidential survival regression"};
    app.require_subcommand(1);

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    sim->add_option("--kind", sa.kind, "illustrative, lph, nlph or nlnph")->capture_default_str();
    sim->add_option("--n", sa.n, "number of records")->capture_default_str();
    sim->add_option("--seed", sa.seed)->capture_default_str();
    sim->add_option("--censor", sa.censor, "censoring probability (illustrative)")->capture_default_str();
    sim->add_option("--lambda0", sa.lambda0, "baseline hazard (0.1 lph/nlph, 0.02 nlnph)");
    sim->add_option("--out,-o", sa.out)->capture_default_str();

    TrainArgs ta;
    auto* trn = app.add_subcommand("train", "fit a model");
    trn->add_option("--data", ta.data, "full dataset, split 0.6/0.2/0.2");
    trn->add_option("--train", ta.train, "pre-split training file");
    trn->add_option("--val", ta.val, "pre-split validation file");
    trn->add_option("--config,-c", ta.config, "JSON training config");
    trn->add_option("--split-seed", ta.split_seed)->capture_default_str();
    trn->add_option("--seed", ta.seed, "overrides the config seed");
    trn->add_option("--test-out", ta.test_out, "write the held-out fold here");
    trn->add_option("--model,-m", ta.model)->capture_default_str();
    trn->add_option("--history", ta.history)->capture_default_str();

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "evaluate a model");
    ev->add_option("--model,-m", ea.model)->required();
    ev->add_option("--data", ea.data)->required();
    ev->add_option("--out,-o", ea.out, "output directory")->capture_default_str();
    ev->add_option("--mode", ea.mode, "lower, mid or upper")->capture_default_str();
    ev->add_option("--heatmap", ea.heatmap, "\"feature=<name> grid=21\"");
    ev->add_flag("--true-durations", ea.true_durations, "calibrate against t_true");
    ev->add_flag("!--no-grids", ea.grids, "skip survival.csv");

    ProtocolArgs pa;
    auto* pr = app.add_subcommand("protocol", "repeated random splits");
    pr->add_option("--data", pa.data)->required();
    pr->add_option("--config,-c", pa.config);
    pr->add_option("--n-splits", pa.n_splits)->capture_default_str();
    pr->add_option("--seeds", pa.seeds, "explicit split seeds (default 0..n-1)")->delimiter(',');
    pr->add_option("--mode", pa.mode)->capture_default_str();
    pr->add_option("--out,-o", pa.out)->capture_default_str();
    pr->add_flag("--parallel", pa.parallel, "run splits on separate threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return finish(2, "parse", e.what());
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*sim) cmd_simulate(sa);
        else if (*trn) cmd_train(ta);
        else if (*ev) cmd_eval(ea);
        else if (*pr) cmd_protocol(pa);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return finish(2, command, e.what());
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return finish(3, command, e.what());
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return finish(3, command, e.what());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return finish(2, command, e.what());
    }
    return finish(0, command);
}
