#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "stdpp/error.hpp"
#include "stdpp/estimate.hpp"
#include "stdpp/kernels.hpp"
#include "stdpp/moments.hpp"
#include "stdpp/parallel.hpp"
#include "stdpp/pattern.hpp"
#include "stdpp/simulate.hpp"
#include "stdpp/version.hpp"

namespace stdpp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Malformed configuration or command line: exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Output could not be written: exit status 1.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw UsageError("config '" + path + "' must be a JSON object");
        // A manifest written by a previous run carries its resolved config.
        if (j.contains("config") && j.contains("version")) return j.at("config");
        return j;
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path + "': " + e.what());
    }
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw UsageError("override '" + assignment + "' must look like key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;  // bare strings need no quoting
    }
    json* node = &config;
    json* parent = nullptr;
    std::string leaf;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (part.empty()) throw UsageError("override key '" + key + "' has an empty component");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw UsageError("override '" + key + "' descends into a non-object");
        parent = node;
        leaf = part;
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (value.is_null()) {
        parent->erase(leaf);  // key=null removes the entry
    } else {
        *node = std::move(value);
    }
}

/// Decoding helpers: every failure while reading the config is a usage error.
template <class F>
auto decode(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        if (msg.starts_with(what)) throw UsageError(msg);
        throw UsageError(std::string(what) + ": " + msg);
    }
}

const json& require(const json& config, const char* key, const char* command) {
    const auto it = config.find(key);
    if (it == config.end() || it->is_null()) {
        throw UsageError(std::string(command) + ": config is missing '" + key + "'");
    }
    return *it;
}

json section(const json& config, const char* key) {
    const auto it = config.find(key);
    if (it == config.end() || it->is_null()) return json::object();
    if (!it->is_object()) throw UsageError(std::string("'") + key + "' must be an object");
    return *it;
}

std::string output_dir(const json& config, const char* command) {
    const json& p = require(config, "output_path", command);
    if (!p.is_string()) throw UsageError("output_path must be a string");
    return p.get<std::string>();
}

enum class Format { Csv, Json };

Format format_of(const json& config) {
    const std::string f = decode("format", [&] { return config.value("format", std::string("csv")); });
    if (f == "csv") return Format::Csv;
    if (f == "json") return Format::Json;
    throw UsageError("format must be 'csv' or 'json'");
}

std::uint64_t seed_of(const json& config) {
    return decode("seed", [&] { return config.value("seed", std::uint64_t{1}); });
}

std::vector<std::string> input_list(const json& sec, const char* command) {
    const json& in = require(sec, "inputs", command);
    return decode("inputs", [&] {
        if (in.is_string()) return std::vector<std::string>{in.get<std::string>()};
        return in.get<std::vector<std::string>>();
    });
}

std::vector<PointPattern> read_patterns(const std::vector<std::string>& paths, const Box& window) {
    std::vector<PointPattern> out;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open pattern file '" + path + "'");
        try {
            PointPattern p = read_pattern_csv(in, window);
            p.seed_provenance = path;
            out.push_back(std::move(p));
        } catch (const stdpp::ParseError& e) {
            throw UsageError(path + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------- output

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string curve_text(const SummaryCurve& c, Format f) {
    if (f == Format::Json) return to_json(c).dump(2) + "\n";
    std::ostringstream os;
    write_curve_csv(os, c);
    return os.str();
}

const char* extension(Format f) { return f == Format::Json ? ".json" : ".csv"; }

json manifest_base(const char* command, const json& config) {
    return {{"version", std::string(version())}, {"command", command}, {"config", config}};
}

// ---------------------------------------------------------------- commands

int run_validate(const json& config, std::ostream& out) {
    const KernelModel model = decode("model", [&] { return model_from_json(require(config, "model", "validate")); });
    const ExistenceReport r = validate_existence(model);
    json report{{"family", std::string(family_name(model.family()))},
                {"valid", r.valid},
                {"rho", r.rho},
                {"rho_max", r.rho_max},
                {"phi_max", r.phi_max},
                {"intensity", r.intensity}};
    if (format_of(config) == Format::Json) {
        out << report.dump(2) << "\n";
    } else {
        out << std::setprecision(17);
        out << "family: " << report["family"].get<std::string>() << "\n"
            << "valid: " << (r.valid ? "true" : "false") << "\n"
            << "rho: " << r.rho << "\n"
            << "rho_max: " << r.rho_max << "\n"
            << "phi_max: " << r.phi_max << "\n"
            << "intensity: " << r.intensity << "\n";
    }
    if (config.contains("output_path")) {
        write_file(output_dir(config, "validate"), report.dump(2) + "\n");
    }
    return r.valid ? kOk : kDomainFailure;
}

int run_curves(const json& config, std::ostream& out, std::ostream& err) {
    std::vector<KernelModel> models = decode("models", [&] {
        std::vector<KernelModel> ms;
        if (config.contains("models")) {
            for (const auto& m : config.at("models")) ms.push_back(model_from_json(m));
        } else {
            ms.push_back(model_from_json(require(config, "model", "curves")));
        }
        return ms;
    });
    if (models.empty()) throw UsageError("curves: 'models' is empty");
    const LagGrid grid = decode("grid", [&] { return lag_grid_from_json(require(config, "grid", "curves")); });
    const json sec = section(config, "curves");
    const auto stats = decode("curves.statistics", [&] {
        return sec.value("statistics", std::vector<std::string>{"g"});
    });
    for (const auto& s : stats) {
        if (s != "g" && s != "K") throw UsageError("curves.statistics entries must be 'g' or 'K'");
    }
    const std::string k_method = decode("curves.k_method", [&] { return sec.value("k_method", std::string("quadrature")); });
    if (k_method != "quadrature" && k_method != "closed_form") {
        throw UsageError("curves.k_method must be 'quadrature' or 'closed_form'");
    }
    const std::optional<InversionGrid> inversion = decode("curves.inversion", [&]() -> std::optional<InversionGrid> {
        if (!sec.contains("inversion")) return std::nullopt;
        const json& j = sec.at("inversion");
        InversionGrid g;
        g.tau_cutoff = j.value("tau_cutoff", g.tau_cutoff);
        g.panels = j.value("panels", g.panels);
        g.tolerance = j.value("tolerance", g.tolerance);
        return g;
    });
    const Format fmt = format_of(config);
    const fs::path dir = output_dir(config, "curves");

    for (std::size_t i = 0; i < models.size(); ++i) {
        if (!validate_existence(models[i]).valid) {
            err << "curves: model " << i << " (" << to_json(models[i]).dump() << ") does not exist\n";
            return kDomainFailure;
        }
    }
    ensure_dir(dir);
    json files = json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (const auto& s : stats) {
            const SummaryCurve c =
                s == "g" ? pcf_theoretical(models[i], grid, inversion)
                         : kfun_theoretical(models[i], grid,
                                            k_method == "closed_form" ? KMethod::ClosedForm : KMethod::Quadrature);
            const std::string name = s + "_" + std::to_string(i) + extension(fmt);
            write_file(dir / name, curve_text(c, fmt));
            files.push_back({{"file", name}, {"statistic", s}, {"model", to_json(models[i])}});
            out << (dir / name).string() << "\n";
        }
    }
    json manifest = manifest_base("curves", config);
    manifest["grid"] = to_json(grid);
    manifest["files"] = files;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return kOk;
}

int run_simulate(const json& config, std::ostream& out, std::ostream& err) {
    const json sec = section(config, "simulation");
    const std::string process = decode("simulation.process", [&] { return sec.value("process", std::string("stdpp")); });
    if (process != "stdpp" && process != "poisson") throw UsageError("simulation.process must be 'stdpp' or 'poisson'");
    const Box window = decode("window", [&] { return box_from_json(require(config, "window", "simulate")); });
    const std::uint64_t seed = seed_of(config);
    const std::size_t replicates = decode("replicates", [&] { return config.value("replicates", std::size_t{1}); });
    if (replicates < 1) throw UsageError("replicates must be >= 1");
    if (format_of(config) != Format::Csv) throw UsageError("simulate writes CSV patterns only");
    const fs::path dir = output_dir(config, "simulate");

    json manifest = manifest_base("simulate", config);
    manifest["window"] = to_json(window);
    manifest["seed"] = seed;
    std::vector<PointPattern> patterns;
    json model_json;
    if (process == "poisson") {
        const double rho = decode("simulation.rho", [&] { return require(sec, "rho", "simulate").get<double>(); });
        if (!(rho > 0.0)) throw UsageError("simulation.rho must be positive");
        patterns = sample_poisson_replicates(rho, window, seed, replicates);
        manifest["rho"] = rho;
    } else {
        const KernelModel model = decode("model", [&] { return model_from_json(require(config, "model", "simulate")); });
        const double tolerance = decode("simulation.tolerance", [&] { return sec.value("tolerance", kDefaultTruncationTolerance); });
        const double enlargement = decode("simulation.enlargement", [&] { return sec.value("enlargement", kDefaultEnlargement); });
        const SamplerOptions opts{decode("simulation.proposal_factor", [&] { return sec.value("proposal_factor", 500.0); })};
        const std::optional<ModeCutoff> fixed = decode("simulation.cutoff", [&]() -> std::optional<ModeCutoff> {
            if (!sec.contains("cutoff")) return ModeCutoff{};
            const json& c = sec.at("cutoff");
            if (c.is_string() && c.get<std::string>() == "auto") return std::nullopt;
            if (c.is_number_integer()) {
                const int k = c.get<int>();
                return ModeCutoff{k, k, k};
            }
            return ModeCutoff{c.at("x").get<int>(), c.at("y").get<int>(), c.at("t").get<int>()};
        });
        if (!validate_existence(model).valid) {
            err << "simulate: model does not exist (phi(0,0) >= 1)\n";
            return kDomainFailure;
        }
        const ModeCutoff cutoff = fixed ? *fixed : suggest_cutoff(model, window, tolerance, enlargement);
        const SpectralApproximation approx = build_spectral_approx(model, window, cutoff, tolerance, enlargement);
        patterns = sample_stdpp_replicates(approx, seed, replicates, opts);
        model_json = to_json(model);
        manifest["model"] = model_json;
        manifest["cutoff"] = {{"x", cutoff.x}, {"y", cutoff.y}, {"t", cutoff.t}};
        manifest["enlargement"] = enlargement;
        manifest["tolerance"] = tolerance;
        manifest["truncation_fraction"] = approx.truncation_mass / approx.total_mass;
        manifest["expected_count"] = approx.expected_count();
    }

    ensure_dir(dir);
    std::vector<std::string> names(replicates);
    parallel_for(replicates, [&](std::size_t r) {
        std::ostringstream id;
        id << "pattern_" << std::setw(4) << std::setfill('0') << r;
        names[r] = id.str();
        std::ostringstream csv;
        write_pattern_csv(csv, patterns[r]);
        write_file(dir / (names[r] + ".csv"), csv.str());
        json side{{"window", to_json(window)}, {"seed", seed}, {"stream", r},
                  {"seed_provenance", patterns[r].seed_provenance}};
        if (!model_json.is_null()) {
            side["model"] = model_json;
            side["cutoff"] = manifest["cutoff"];
        }
        write_file(dir / (names[r] + ".json"), side.dump(2) + "\n");
    });
    json reps = json::array();
    for (std::size_t r = 0; r < replicates; ++r) {
        reps.push_back({{"file", names[r] + ".csv"}, {"stream", r},
                        {"seed_provenance", patterns[r].seed_provenance},
                        {"count", patterns[r].points.size()}});
        out << (dir / (names[r] + ".csv")).string() << "\n";
    }
    manifest["replicates"] = reps;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return kOk;
}

int run_summarize(const json& config, std::ostream& out) {
    const json sec = section(config, "summarize");
    const Box window = decode("window", [&] { return box_from_json(require(config, "window", "summarize")); });
    const LagGrid grid = decode("grid", [&] { return lag_grid_from_json(require(config, "grid", "summarize")); });
    const auto stats = decode("summarize.statistics", [&] {
        return sec.value("statistics", std::vector<std::string>{"K", "g"});
    });
    for (const auto& s : stats) {
        if (s != "g" && s != "K") throw UsageError("summarize.statistics entries must be 'g' or 'K'");
    }
    const bool pooled = decode("summarize.pooled", [&] { return sec.value("pooled", true); });
    const std::optional<BandwidthSpec> bw = decode("summarize.bandwidth", [&]() -> std::optional<BandwidthSpec> {
        if (!sec.contains("bandwidth")) return std::nullopt;
        return BandwidthSpec{sec.at("bandwidth").at("spatial").get<double>(),
                             sec.at("bandwidth").at("temporal").get<double>()};
    });
    const Format fmt = format_of(config);
    const fs::path dir = output_dir(config, "summarize");
    const auto inputs = input_list(sec, "summarize");
    const auto patterns = read_patterns(inputs, window);

    ensure_dir(dir);
    json files = json::array();
    const auto emit = [&](std::span<const PointPattern> ps, const std::string& suffix) {
        for (const auto& s : stats) {
            const SummaryCurve c = s == "K" ? estimate_kfun(ps, grid) : estimate_pcf(ps, grid, bw);
            const std::string name = s + "_empirical" + suffix + extension(fmt);
            write_file(dir / name, curve_text(c, fmt));
            files.push_back({{"file", name}, {"statistic", s}});
            out << (dir / name).string() << "\n";
        }
    };
    if (pooled) {
        emit(patterns, "");
    } else {
        for (std::size_t i = 0; i < patterns.size(); ++i) {
            emit(std::span<const PointPattern>(&patterns[i], 1), "_" + std::to_string(i));
        }
    }
    json manifest = manifest_base("summarize", config);
    manifest["inputs"] = inputs;
    manifest["files"] = files;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return kOk;
}

int run_fit(const json& config, std::ostream& out, std::ostream& err) {
    const json sec = section(config, "fit");
    const Box window = decode("window", [&] { return box_from_json(require(config, "window", "fit")); });
    const LagGrid grid = decode("grid", [&] { return lag_grid_from_json(require(config, "grid", "fit")); });
    const Family family = decode("fit.family", [&] {
        return family_from_name(require(sec, "family", "fit").get<std::string>());
    });
    const ParameterBounds bounds = decode("fit.bounds", [&] { return bounds_from_json(require(sec, "bounds", "fit")); });
    FitOptions opts;
    decode("fit options", [&] {
        const std::string stat = sec.value("statistic", std::string("K"));
        if (stat != "K" && stat != "g") throw UsageError("fit.statistic must be 'K' or 'g'");
        opts.statistic = stat == "K" ? ContrastStatistic::K : ContrastStatistic::G;
        opts.exponent = sec.value("exponent", opts.exponent);
        opts.max_evaluations = sec.value("max_evaluations", opts.max_evaluations);
        opts.seed = sec.value("seed", seed_of(config));
        if (sec.contains("bandwidth")) {
            opts.bandwidth = BandwidthSpec{sec.at("bandwidth").at("spatial").get<double>(),
                                           sec.at("bandwidth").at("temporal").get<double>()};
        }
        return 0;
    });
    const bool strict = decode("fit.strict", [&] { return sec.value("strict", false); });
    const fs::path dir = output_dir(config, "fit");
    const auto inputs = input_list(sec, "fit");
    const auto patterns = read_patterns(inputs, window);

    const FitResult fit = fit_min_contrast(patterns, family, bounds, grid, opts);
    json result = to_json(fit);
    ensure_dir(dir);
    write_file(dir / "fit.json", result.dump(2) + "\n");
    json manifest = manifest_base("fit", config);
    manifest["inputs"] = inputs;
    manifest["files"] = json::array({"fit.json"});
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    out << result.dump(2) << "\n";
    if (strict && !fit.converged) {
        err << "fit: optimizer did not converge within " << opts.max_evaluations << " evaluations\n";
        return kDomainFailure;
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatio-temporal determinantal point processes", "stdpp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    std::string config_path;
    std::vector<std::string> overrides;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "JSON config file (a run manifest also works)");
        sub->add_option("-s,--set", overrides, "Override a config entry: dotted.key=value (value parsed as JSON)")
            ->allow_extra_args(false);
    };
    const std::vector<std::pair<const char*, const char*>> commands{
        {"validate", "Check the existence condition of a model"},
        {"curves", "Write theoretical g / K curves for one or more models"},
        {"simulate", "Simulate STDPP or Poisson replicates on a window"},
        {"summarize", "Estimate K and g from pattern CSV files"},
        {"fit", "Minimum-contrast fit of a model family to pattern CSV files"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream cli_out, cli_err;
        const int code = app.exit(e, cli_out, cli_err);
        out << cli_out.str();
        err << cli_err.str();
        return code == 0 ? kOk : kUsageError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    json config = json::object();
    try {
        if (!config_path.empty()) config = read_json_file(config_path);
        for (const auto& o : overrides) apply_override(config, o);
        if (config.contains("command") && config.at("command") != command) {
            throw UsageError("config is for command '" + config.at("command").dump() + "', not '" + command + "'");
        }
        config["command"] = command;
    } catch (const UsageError& e) {
        err << "stdpp " << command << ": " << e.what() << "\n";
        return kUsageError;
    }

    try {
        if (command == "validate") return run_validate(config, out);
        if (command == "curves") return run_curves(config, out, err);
        if (command == "simulate") return run_simulate(config, out, err);
        if (command == "summarize") return run_summarize(config, out);
        return run_fit(config, out, err);
    } catch (const UsageError& e) {
        err << "stdpp " << command << ": " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "stdpp " << command << ": " << e.what() << "\n";
        return kDomainFailure;
    }
}

}  // namespace stdpp::cli
