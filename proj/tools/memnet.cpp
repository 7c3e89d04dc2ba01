// memnet: generate datasets, fit memorizing networks, run scaling sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memnet/bounds.hpp"
#include "memnet/experiment.hpp"
#include "memnet/harmonic.hpp"
#include "memnet/network.hpp"

namespace {

using namespace memnet;

constexpr int kExitParameter = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << text;
}

std::string genericity_json(const Dataset& ds, const GenericityReport& r) {
    nlohmann::ordered_json doc;
    doc["n"] = ds.n();
    doc["d"] = ds.d();
    doc["label_kind"] = std::string(to_string(ds.label_kind));
    doc["gamma"] = r.gamma;
    doc["omega"] = r.omega;
    doc["min_norm"] = r.min_norm;
    doc["general_position"] = r.general_position;
    return doc.dump(2);
}

/// Expands `--config file.json` into flags. Keys already given on the command
/// line win; arrays become repeated values and `true` becomes a bare flag.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    const auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (it + 1 == args.end()) throw ParameterError("--config needs a file name");
    const std::string path = *(it + 1);
    args.erase(it, it + 2);

    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw DataError("config '" + path + "' must hold a JSON object");

    static const std::set<std::string> commands{"gen-data", "fit", "sweep", "calibrate", "bounds"};
    const bool has_command = args.size() > 1 && commands.contains(args[1]);
    if (!has_command) {
        if (!doc.contains("command")) throw ParameterError("config needs a \"command\" when none is given");
        args.insert(args.begin() + 1, doc["command"].get<std::string>());
    }
    std::set<std::string> given;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));

    for (const auto& [key, value] : doc.items()) {
        if (key == "command" || given.contains(key)) continue;
        if (key == "dataset" || key == "networks") {
            if (value.is_array())
                for (const auto& v : value) args.push_back(v.get<std::string>());
            else args.push_back(value.get<std::string>());
            continue;
        }
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
            continue;
        }
        args.push_back("--" + key);
        auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (value.is_array())
            for (const auto& v : value) args.push_back(scalar(v));
        else args.push_back(scalar(value));
    }
    return args;
}

int run(int argc, char** argv) {
    std::vector<std::string> raw(argv, argv + argc);
    std::vector<std::string> args = expand_config(raw);

    CLI::App app{"Construct and measure two-layer networks that memorize a dataset"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    app.add_option("--config", "JSON file whose keys supply flag values");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Sample sphere data and write a dataset file");
    Index gen_n = 0, gen_d = 0, gen_ones = -1;
    std::uint64_t gen_seed = 0;
    std::string gen_labels = "rademacher", gen_out;
    gen->add_option("--n", gen_n, "Number of points")->required();
    gen->add_option("--d", gen_d, "Dimension (>= 2)")->required();
    gen->add_option("--seed", gen_seed, "Random seed");
    gen->add_option("--labels", gen_labels, "rademacher, gaussian, binary or none");
    gen->add_option("--ones", gen_ones, "Label-1 count for binary labels (default 30%)");
    gen->add_option("-o,--output", gen_out, "Output dataset file")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit one construction to a dataset file");
    std::string fit_method, fit_dataset, fit_prefix;
    std::optional<double> fit_eps;
    std::uint64_t fit_seed = 0;
    fit->add_option("--method", fit_method, "exact, baum-threshold, baum-relu, ntk or harmonic")->required();
    fit->add_option("--epsilon", fit_eps, "Target error ratio (ntk, harmonic)");
    fit->add_option("--seed", fit_seed, "Random seed");
    fit->add_option("-o,--output", fit_prefix, "Output prefix (default: dataset path without extension)");
    fit->add_option("dataset", fit_dataset, "Dataset file (.bin from gen-data, or .csv)")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a method over an n x seed grid and write CSV");
    std::string sweep_method, sweep_labels = "rademacher", sweep_out;
    SweepConfig config;
    std::vector<Index> sweep_n;
    std::vector<std::uint64_t> sweep_seeds{1};
    std::optional<double> sweep_eps;
    sweep->add_option("--method", sweep_method, "Construction")->required();
    sweep->add_option("--d", config.d, "Dimension");
    sweep->add_option("--n", sweep_n, "List of n values")->required();
    sweep->add_option("--seeds", sweep_seeds, "List of seeds");
    sweep->add_option("--epsilon", sweep_eps, "Target error ratio (ntk, harmonic)");
    sweep->add_option("--labels", sweep_labels, "rademacher or gaussian");
    sweep->add_flag("--parallel", config.parallel, "Run cells in parallel (MEMNET_THREADS caps workers)");
    sweep->add_option("-o,--output", sweep_out, "CSV path (default: stdout)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Recompute the harmonic constants table");
    CalibrationOptions cal_options;
    std::string cal_out;
    cal->add_option("--n", cal_options.n, "Fixture size");
    cal->add_option("--d", cal_options.d, "Fixture dimension");
    cal->add_option("--draws", cal_options.draws, "Candidate draws per degree");
    cal->add_option("--seed", cal_options.seed, "Fixture seed");
    cal->add_option("--m-min", cal_options.m_min, "Smallest degree");
    cal->add_option("--m-max", cal_options.m_max, "Largest degree");
    cal->add_option("--date", cal_options.date, "Date stamped into the table");
    cal->add_option("-o,--output", cal_out, "TSV path (default: stdout)");

    // bounds
    auto* bnd = app.add_subcommand("bounds", "Check the weight floor sqrt(n)/(8L) for saved networks");
    std::string bnd_dataset, bnd_out;
    std::vector<std::string> bnd_nets;
    std::optional<double> bnd_lipschitz;
    bnd->add_option("dataset", bnd_dataset, "Dataset with +-1 labels")->required();
    bnd->add_option("networks", bnd_nets, "Network JSON files")->required();
    bnd->add_option("--lipschitz", bnd_lipschitz, "Override L for every network");
    bnd->add_option("-o,--output", bnd_out, "Report path (default: stdout)");

    // CLI11 takes the arguments without the program name, in reverse order.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParameter;
    }

    auto load_any = [](const std::string& path) {
        return path.size() > 4 && path.substr(path.size() - 4) == ".csv" ? load_csv(path) : load_dataset(path);
    };

    if (*gen) {
        Dataset ds = sample_sphere(gen_n, gen_d, gen_seed);
        const LabelKind kind = label_kind_from_string(gen_labels);
        switch (kind) {
            case LabelKind::none: break;
            case LabelKind::rademacher: ds = rademacher_labels(std::move(ds), gen_seed); break;
            case LabelKind::gaussian: ds = gaussian_labels(std::move(ds), gen_seed); break;
            case LabelKind::binary:
                ds = binary_labels(std::move(ds), gen_ones >= 0 ? gen_ones : (3 * gen_n) / 10, gen_seed);
                break;
            default: throw ParameterError("gen-data cannot produce '" + gen_labels + "' labels");
        }
        save_dataset(ds, gen_out);
        std::cout << genericity_json(ds, genericity(ds, gen_seed)) << '\n';
        return 0;
    }
    if (*fit) {
        const Method method = method_from_string(fit_method);
        const Dataset ds = load_any(fit_dataset);
        const FitOutcome outcome = run_method(method, ds, fit_eps, fit_seed);
        std::string prefix = fit_prefix;
        if (prefix.empty()) {
            prefix = fit_dataset;
            const auto dot = prefix.find_last_of('.');
            if (dot != std::string::npos && dot > prefix.find_last_of('/') + 1) prefix.erase(dot);
            prefix += "." + std::string(to_string(method));
        }
        save_network(outcome.net, prefix + ".network.json");
        if (outcome.trace) write_text(prefix + ".trace.csv", trace_to_csv(*outcome.trace));
        const std::string summary = outcome_to_json(outcome);
        write_text(prefix + ".summary.json", summary + "\n");
        std::cout << summary << '\n';
        return 0;
    }
    if (*sweep) {
        config.method = method_from_string(sweep_method);
        config.n_list = sweep_n;
        config.seeds = sweep_seeds;
        config.epsilon = sweep_eps;
        config.labels = label_kind_from_string(sweep_labels);
        const std::string csv = sweep_to_csv(run_sweep(config));
        if (sweep_out.empty()) std::cout << csv;
        else write_text(sweep_out, csv);
        return 0;
    }
    if (*cal) {
        const std::string tsv = constants_to_tsv(calibrate(cal_options));
        if (cal_out.empty()) std::cout << tsv;
        else write_text(cal_out, tsv);
        return 0;
    }
    if (*bnd) {
        const Dataset ds = load_any(bnd_dataset);
        std::vector<NamedNetwork> nets;
        for (const auto& path : bnd_nets) nets.push_back({path, load_network(path)});
        const auto report = verify_weight_bound(ds, nets, bnd_lipschitz);
        const std::string json = report_to_json(report);
        if (bnd_out.empty()) std::cout << json << '\n';
        else write_text(bnd_out, json + "\n");
        return report.falsified() ? 1 : 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const memnet::ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const memnet::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const memnet::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
