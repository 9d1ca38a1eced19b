#include "tcrank/cli.hpp"

#include "CLI11.hpp"
#include "tcrank/tcrank.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

// Exit codes.
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_numerical = 4;

/*
 * Options shared by the analysis commands. Strings are parsed after the command line and any
 * configuration file have been merged, so that `inf` and relative paths behave the same in both.
 */
struct Settings {
    std::string input;
    std::string out = ".";
    std::string config;
    std::string design = "zero";
    std::vector<std::string> stats;
    std::string nu, eta, p, lambda_file;
    std::string contrast = "helmert";
    std::string sort = "mb";
    std::string mu0;
    std::uint64_t seed = 1;
    int threads = 1;

    // Simulation settings.
    std::string sim_nu = "13", sim_eta = "0.08", sim_lambda_file;
    std::size_t datasets = 100;
    std::size_t genes = 20000;
    std::size_t nonconstant = 400;
    int n = 3;
    std::string xi = "3", lambda_sq = "0.3", theta = "0", kappa = "0.02";
    bool shuffle = false;

    // Comparison and sweep settings.
    std::size_t x_min = 0, x_max = 0;
    std::vector<double> nu_grid = tcrank::default_nu_grid();
    std::string baseline_nu;
    std::size_t top = 859;
};

struct Registered {
    std::map<std::string, CLI::Option*> options;

    bool given(const std::string& name) const {
        auto it = options.find(name);
        return it != options.end() && it->second->count() > 0;
    }
};

double number(const std::string& value, const std::string& what) {
    return tcrank::ebayes_internal::parse_double(value, what);
}

std::vector<std::string> split(const std::string& x, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(x);
    std::string item;
    while (std::getline(ss, item, sep)) {
        auto t = tcrank::io_internal::trim(item);
        if (!t.empty()) {
            out.push_back(t);
        }
    }
    return out;
}

/*
 * Fill every option that was not given on the command line from the `name = value` configuration file.
 * Configuration keys use underscores where flags use hyphens.
 */
void merge_config(Settings& s, const Registered& reg, bool simulating) {
    if (s.config.empty()) {
        return;
    }
    auto kv = tcrank::read_key_values(s.config);
    auto take = [&](const std::string& flag, auto&& assign) {
        std::string key = flag;
        for (auto& c : key) {
            if (c == '-') {
                c = '_';
            }
        }
        auto it = kv.find(key);
        if (it != kv.end() && reg.options.count(flag) && !reg.given(flag)) {
            assign(it->second);
        }
    };
    auto as_size = [&](const std::string& v, const std::string& key) {
        const double x = number(v, s.config + " key " + key);
        if (!(x >= 0) || x != std::floor(x)) {
            throw tcrank::ParameterOutOfRange(s.config + " key " + key + " must be a non-negative integer");
        }
        return static_cast<std::size_t>(x);
    };

    take("input", [&](const std::string& v) { s.input = v; });
    take("design", [&](const std::string& v) { s.design = v; });
    take("stat", [&](const std::string& v) { s.stats = split(v, ','); });
    take("nu", [&](const std::string& v) { (simulating ? s.sim_nu : s.nu) = v; });
    take("eta", [&](const std::string& v) { (simulating ? s.sim_eta : s.eta) = v; });
    take("sim-nu", [&](const std::string& v) { s.sim_nu = v; });
    take("sim-eta", [&](const std::string& v) { s.sim_eta = v; });
    take("p", [&](const std::string& v) { s.p = v; });
    take("contrast", [&](const std::string& v) { s.contrast = v; });
    take("sort", [&](const std::string& v) { s.sort = v; });
    take("mu0", [&](const std::string& v) { s.mu0 = v; });
    take("seed", [&](const std::string& v) { s.seed = as_size(v, "seed"); });
    take("threads", [&](const std::string& v) { s.threads = static_cast<int>(as_size(v, "threads")); });
    take("datasets", [&](const std::string& v) { s.datasets = as_size(v, "datasets"); });
    take("genes", [&](const std::string& v) { s.genes = as_size(v, "genes"); });
    take("nonconstant", [&](const std::string& v) { s.nonconstant = as_size(v, "nonconstant"); });
    take("n", [&](const std::string& v) { s.n = static_cast<int>(as_size(v, "n")); });
    take("xi", [&](const std::string& v) { s.xi = v; });
    take("lambda-sq", [&](const std::string& v) { s.lambda_sq = v; });
    take("theta", [&](const std::string& v) { s.theta = v; });
    take("kappa", [&](const std::string& v) { s.kappa = v; });
    take("baseline-nu", [&](const std::string& v) { s.baseline_nu = v; });

    // A relative Lambda sidecar is resolved against the configuration file's directory.
    auto resolve = [&](const std::string& v) {
        fs::path lp(v);
        return lp.is_absolute() ? v : (fs::path(s.config).parent_path() / lp).string();
    };
    take("lambda-file", [&](const std::string& v) { (simulating ? s.sim_lambda_file : s.lambda_file) = resolve(v); });
    take("sim-lambda-file", [&](const std::string& v) { s.sim_lambda_file = resolve(v); });
}

tcrank::HyperOverrides overrides(const Settings& s) {
    tcrank::HyperOverrides user;
    if (!s.nu.empty()) {
        user.nu = number(s.nu, "--nu");
    }
    if (!s.eta.empty()) {
        user.eta = number(s.eta, "--eta");
    }
    if (!s.p.empty()) {
        user.p = number(s.p, "--p");
    }
    if (!s.lambda_file.empty()) {
        user.lambda = tcrank::read_matrix_csv(s.lambda_file);
    }
    return user;
}

tcrank::ContrastKind parse_contrast(const std::string& x) {
    if (x == "helmert") {
        return tcrank::ContrastKind::HELMERT;
    }
    if (x == "first-difference" || x == "second") {
        return tcrank::ContrastKind::FIRST_DIFFERENCE;
    }
    throw tcrank::ParameterOutOfRange("unknown contrast '" + x + "', expected helmert or first-difference");
}

struct Analysis {
    tcrank::NullSpec null;
    tcrank::AnalysisOptions options;
};

Analysis analysis(const Settings& s) {
    Analysis out;
    out.options.user = overrides(s);
    out.options.num_threads = s.threads;
    out.options.contrast = parse_contrast(s.contrast);
    if (s.sort == "t2") {
        out.options.sort_by_t2 = true;
    } else if (s.sort != "mb") {
        throw tcrank::ParameterOutOfRange("unknown sort key '" + s.sort + "', expected mb or t2");
    }

    if (s.design == "zero") {
        out.null = tcrank::NullSpec::zero_mean();
    } else if (s.design == "known-mean") {
        if (s.mu0.empty()) {
            throw tcrank::ParameterOutOfRange("--design known-mean needs --mu0");
        }
        auto parts = split(s.mu0, ',');
        tcrank::Vector mu(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) {
            mu[static_cast<Eigen::Index>(i)] = number(parts[i], "--mu0");
        }
        out.null = tcrank::NullSpec::known_mean(std::move(mu));
    } else if (s.design == "constant") {
        out.null = tcrank::NullSpec::constant_mean(out.options.contrast);
    } else if (s.design == "two-sample-paired") {
        out.null = tcrank::NullSpec::equal_two_sample();
        out.options.paired = true;
    } else if (s.design == "two-sample-unpaired") {
        out.null = tcrank::NullSpec::equal_two_sample();
        out.options.paired = false;
    } else {
        throw tcrank::ParameterOutOfRange("unknown design '" + s.design + "'");
    }
    return out;
}

std::vector<tcrank::StatisticKind> statistics(const Settings& s, bool all_by_default) {
    std::vector<tcrank::StatisticKind> out;
    if (s.stats.empty()) {
        if (all_by_default) {
            out.assign(std::begin(tcrank::comparison_statistics), std::end(tcrank::comparison_statistics));
        } else {
            out.push_back(tcrank::StatisticKind::MB);
        }
        return out;
    }
    for (const auto& x : s.stats) {
        for (const auto& y : split(x, ',')) {
            out.push_back(tcrank::parse_statistic(y));
        }
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    return tcrank::io_internal::open_output(path.string());
}

std::string fmt(double x) {
    return tcrank::io_internal::format_value(x);
}

void write_hypers_metadata(std::ostream& out, const tcrank::Hyperparameters& h, bool constancy) {
    using tcrank::to_string;
    out << "# nu: " << fmt(h.nu) << " (" << to_string(h.provenance.nu) << ")\n";
    if (h.provenance.lambda == tcrank::Provenance::ESTIMATED && !std::isnan(h.nu_stage1) && h.nu_stage1 != h.nu) {
        out << "# nu_stage1: " << fmt(h.nu_stage1) << "\n";
    }
    out << "# eta: " << fmt(h.eta) << " (" << to_string(h.provenance.eta) << ")\n";
    out << "# p: " << fmt(h.p) << " (" << to_string(h.provenance.p) << ")\n";
    if (h.has_lambda()) {
        out << "# lambda (" << to_string(h.provenance.lambda) << "):";
        for (Eigen::Index i = 0; i < h.lambda.dim(); ++i) {
            out << (i ? " ; " : " ");
            for (Eigen::Index j = 0; j < h.lambda.dim(); ++j) {
                out << (j ? "," : "") << fmt(h.lambda(i, j));
            }
        }
        out << "\n";
    }
    if (constancy) {
        out << "# xi: " << fmt(h.xi) << " (" << to_string(h.provenance.xi) << ")\n";
        out << "# lambda_sq: " << fmt(h.lambda_sq) << " (" << to_string(h.provenance.lambda_sq) << ")\n";
    }
}

void write_common_metadata(std::ostream& out, const std::string& command, const Settings& s, bool seeded) {
    out << "# tcrank_version: " << tcrank::version << "\n";
    out << "# command: " << command << "\n";
    if (!s.input.empty()) {
        out << "# input: " << s.input << "\n";
    }
    out << "# design: " << s.design << "\n";
    out << "# seed: " << (seeded ? std::to_string(s.seed) : std::string("none")) << "\n";
    out << "# rng_algorithm: " << tcrank::rng_algorithm << "\n";
}

tcrank::IngestResult ingest(const Settings& s) {
    if (s.input.empty()) {
        throw tcrank::ParameterOutOfRange("--input is required");
    }
    if (!fs::exists(s.input)) {
        throw tcrank::ParameterOutOfRange("input file " + s.input + " does not exist");
    }
    return tcrank::read_long_csv(s.input);
}

void write_skips(const fs::path& path, const std::vector<std::pair<std::string, tcrank::SkippedGene> >& skips) {
    auto out = open_out(path);
    out << "stage\tgene\treason\n";
    for (const auto& s : skips) {
        out << s.first << '\t' << s.second.gene << '\t' << s.second.reason << '\n';
    }
}

int cmd_rank(const Settings& s) {
    auto kinds = statistics(s, false);
    auto setup = analysis(s);
    auto data = ingest(s);
    fs::create_directories(s.out);

    std::vector<std::pair<std::string, tcrank::SkippedGene> > skips;
    for (const auto& x : data.skipped) {
        skips.emplace_back("ingest", x);
    }

    bool any = false;
    std::optional<tcrank::Error> last_error;
    for (auto kind : kinds) {
        const std::string name = tcrank::to_string(kind);
        tcrank::RankingResult result;
        try {
            result = tcrank::rank_genes(data.dataset, kind, setup.null, setup.options);
        } catch (const tcrank::Error& e) {
            // One statistic failing as a whole does not stop the others.
            std::cerr << "tcrank: " << name << ": " << e.what() << "\n";
            skips.emplace_back(name, tcrank::SkippedGene{ "*", e.what() });
            last_error = e;
            continue;
        }
        for (const auto& x : result.skipped) {
            skips.emplace_back(name, x);
        }
        if (result.scores.empty()) {
            std::cerr << "tcrank: no gene could be scored by " << name << "\n";
            continue;
        }
        any = true;

        auto out = open_out(fs::path(s.out) / ("ranking_" + name + ".tsv"));
        write_common_metadata(out, "rank", s, false);
        out << "# statistic: " << name << "\n";
        out << "# analysis_design: " << tcrank::to_string(result.design) << "\n";
        out << "# genes_ranked: " << result.scores.size() << "\n";
        out << "# genes_skipped: " << result.skipped.size() + data.skipped.size() << "\n";
        if (result.hypers) {
            write_hypers_metadata(out, *result.hypers, result.design == tcrank::Design::CONSTANCY);
        }
        for (const auto& m : result.metadata) {
            out << "# " << m.first << ": " << m.second << "\n";
        }
        for (const auto& n : result.notes) {
            out << "# note: " << n << "\n";
        }
        std::map<std::string, std::size_t> flagged;
        for (const auto& g : result.scores) {
            if (!g.flag.empty()) {
                ++flagged[g.flag];
            }
        }
        for (const auto& f : flagged) {
            out << "# flagged_" << f.first << ": " << f.second << "\n";
        }
        out << "rank\tgene\tstatistic\tt2\tmb\tn\n";
        std::size_t r = 1;
        for (auto o : result.order) {
            const auto& g = result.scores[o];
            out << r++ << '\t' << g.gene << '\t' << fmt(g.statistic) << '\t' << fmt(g.t2) << '\t' << fmt(g.mb) << '\t' << g.n << '\n';
        }
    }

    write_skips(fs::path(s.out) / "skips.tsv", skips);
    if (!any) {
        if (last_error) {
            throw *last_error;
        }
        std::cerr << "tcrank: ranking failed for every gene\n";
        return exit_data;
    }
    return 0;
}

int cmd_estimate(const Settings& s) {
    auto setup = analysis(s);
    auto data = ingest(s);
    auto sums = tcrank::summarize_dataset(data.dataset, setup.null, setup.options);
    auto h = tcrank::fit_hyperparameters(sums, setup.options);

    fs::create_directories(s.out);
    const auto cfg = fs::path(s.out) / "hyperparameters.cfg";
    const auto lambda = fs::path(s.out) / "lambda.csv";
    tcrank::write_hyperparameters(cfg.string(), h, lambda.string());

    std::vector<std::pair<std::string, tcrank::SkippedGene> > skips;
    for (const auto& x : data.skipped) {
        skips.emplace_back("ingest", x);
    }
    for (const auto& x : sums.skipped) {
        skips.emplace_back("summary", x);
    }
    write_skips(fs::path(s.out) / "skips.tsv", skips);

    std::cout << "nu\t" << fmt(h.nu) << "\t" << tcrank::to_string(h.provenance.nu) << "\n";
    std::cout << "eta\t" << fmt(h.eta) << "\t" << tcrank::to_string(h.provenance.eta) << "\n";
    std::cout << "p\t" << fmt(h.p) << "\t" << tcrank::to_string(h.provenance.p) << "\n";
    if (h.eta_fallback) {
        std::cerr << "tcrank: at least one column gave no admissible eta solution and contributed 1\n";
    }
    return 0;
}

/*
 * Simulation settings from the command line. The common matrix of the k - 1 Helmert channels comes
 * from --lambda-file when given, which also sets k.
 */
tcrank::SimulationConfig simulation_config(const Settings& s) {
    tcrank::SimulationConfig config;
    config.num_datasets = s.datasets;
    config.genes = s.genes;
    config.nonconstant = s.nonconstant;
    config.n = s.n;
    config.nu = number(s.sim_nu, "simulation nu");
    config.eta = number(s.sim_eta, "simulation eta");
    config.xi = number(s.xi, "--xi");
    config.lambda_sq = number(s.lambda_sq, "--lambda-sq");
    config.theta = number(s.theta, "--theta");
    config.kappa = number(s.kappa, "--kappa");
    if (!s.sim_lambda_file.empty()) {
        config.lambda1 = tcrank::read_matrix_csv(s.sim_lambda_file);
    }
    config.k = config.lambda1.dim() + 1;
    config.seed = s.seed;
    config.shuffle = s.shuffle;
    config.num_threads = s.threads;
    config.validate();
    return config;
}

std::string padded(std::size_t i, std::size_t total) {
    const int width = std::max<int>(3, static_cast<int>(std::to_string(total).size()));
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%0*zu", width, i + 1);
    return buffer;
}

tcrank::TruthTable truth_table(const tcrank::LabeledDataset& data) {
    tcrank::TruthTable t;
    for (std::size_t g = 0; g < data.dataset.genes.size(); ++g) {
        t.genes.push_back(data.dataset.genes[g].id);
        t.truth.push_back(data.truth[g]);
        t.deviation.push_back(tcrank::mahalanobis_deviation(data.mu[g], data.sigma[g]));
    }
    return t;
}

int cmd_simulate(const Settings& s, const Registered& reg) {
    if (!reg.given("seed") && s.config.empty()) {
        throw tcrank::ParameterOutOfRange("simulate needs --seed");
    }
    if (s.design != "constant") {
        throw tcrank::ParameterOutOfRange("simulate supports --design constant only");
    }
    auto config = simulation_config(s);
    fs::create_directories(s.out);

    std::vector<std::string> files;
    {
        const std::string lname = "simulation_lambda.csv";
        tcrank::write_matrix_csv((fs::path(s.out) / lname).string(), config.lambda1);
        auto out = open_out(fs::path(s.out) / "simulation.cfg");
        out << "# tcrank_version = " << tcrank::version << "\n";
        out << "# rng_algorithm = " << tcrank::rng_algorithm << "\n";
        out << "design = constant\n";
        out << "datasets = " << config.num_datasets << "\n";
        out << "genes = " << config.genes << "\n";
        out << "nonconstant = " << config.nonconstant << "\n";
        out << "n = " << config.n << "\n";
        out << "k = " << config.k << "\n";
        out << "nu = " << fmt(config.nu) << "\n";
        out << "eta = " << fmt(config.eta) << "\n";
        out << "xi = " << fmt(config.xi) << "\n";
        out << "lambda_sq = " << fmt(config.lambda_sq) << "\n";
        out << "theta = " << fmt(config.theta) << "\n";
        out << "kappa = " << fmt(config.kappa) << "\n";
        out << "seed = " << config.seed << "\n";
        out << "shuffle = " << (config.shuffle ? 1 : 0) << "\n";
        out << "lambda_file = " << lname << "\n";
        files.push_back("simulation.cfg");
        files.push_back(lname);
    }

    tcrank::simulate_study(config, [&](std::size_t d, const tcrank::LabeledDataset& data) {
        const auto id = padded(d, config.num_datasets);
        const std::string dname = "dataset_" + id + ".csv", tname = "truth_" + id + ".csv";
        tcrank::write_long_csv((fs::path(s.out) / dname).string(), data.dataset);
        tcrank::write_truth_csv((fs::path(s.out) / tname).string(), truth_table(data));
        files.push_back(dname);
        files.push_back(tname);
    });

    tcrank::write_manifest(s.out, files);
    return 0;
}

/*
 * Datasets listed in a simulation directory's manifest, paired with their truth sidecars.
 */
std::vector<std::pair<std::string, std::string> > simulated_inputs(const std::string& dir) {
    const auto manifest = fs::path(dir) / "manifest.tsv";
    std::ifstream in(manifest);
    if (!in) {
        throw tcrank::ParseError("cannot open " + manifest.string());
    }
    std::vector<std::pair<std::string, std::string> > out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        auto name = line.substr(0, line.find('\t'));
        if (name.rfind("dataset_", 0) == 0) {
            auto truth = "truth_" + name.substr(8);
            out.emplace_back((fs::path(dir) / name).string(), (fs::path(dir) / truth).string());
        }
    }
    if (out.empty()) {
        throw tcrank::ParseError(manifest.string() + " lists no datasets");
    }
    return out;
}

tcrank::LabeledDataset load_labeled(const std::string& data_path, const std::string& truth_path, std::vector<std::string>& skipped) {
    auto ingest = tcrank::read_long_csv(data_path);
    for (const auto& x : ingest.skipped) {
        skipped.push_back(data_path + "\t" + x.gene + "\t" + x.reason);
    }
    auto table = tcrank::read_truth_csv(truth_path);
    std::unordered_map<std::string, int> lookup;
    for (std::size_t i = 0; i < table.genes.size(); ++i) {
        lookup[table.genes[i]] = table.truth[i];
    }
    tcrank::LabeledDataset out;
    out.dataset = std::move(ingest.dataset);
    for (const auto& g : out.dataset.genes) {
        auto it = lookup.find(g.id);
        if (it == lookup.end()) {
            throw tcrank::TruthMismatch("gene " + g.id + " of " + data_path + " has no truth label");
        }
        out.truth.push_back(it->second);
    }
    return out;
}

int cmd_compare(const Settings& s, const Registered& reg) {
    auto kinds = statistics(s, true);
    auto setup = analysis(s);
    fs::create_directories(s.out);

    std::optional<tcrank::Hyperparameters> truth;
    std::vector<std::pair<std::string, std::string> > inputs;
    std::optional<tcrank::SimulationConfig> config;
    if (!s.input.empty()) {
        inputs = simulated_inputs(s.input);
        const auto cfg = fs::path(s.input) / "simulation.cfg";
        if (fs::exists(cfg)) {
            auto kv = tcrank::read_key_values(cfg.string());
            auto h = tcrank::read_hyperparameters(cfg.string());
            tcrank::Hyperparameters t;
            t.nu = h.nu.value_or(std::numeric_limits<double>::quiet_NaN());
            t.eta = h.eta.value_or(std::numeric_limits<double>::quiet_NaN());
            if (h.lambda) {
                t.lambda = *h.lambda;
            }
            truth = t;
        }
    } else {
        if (!reg.given("seed") && s.config.empty()) {
            throw tcrank::ParameterOutOfRange("compare needs --input or --seed");
        }
        config = simulation_config(s);
        truth = tcrank::simulation_truth(*config);
    }

    std::size_t ndatasets = config ? config->num_datasets : inputs.size();
    std::vector<std::string> skipped;
    std::optional<tcrank::ComparisonAccumulator> acc;
    auto add = [&](const tcrank::LabeledDataset& data) {
        if (!acc) {
            const auto nonnull = static_cast<std::size_t>(std::count(data.truth.begin(), data.truth.end(), 1));
            const std::size_t lo = s.x_min ? s.x_min : std::max<std::size_t>(nonnull, 1);
            const std::size_t hi = s.x_max ? s.x_max : std::min(2 * lo, data.truth.size());
            acc.emplace(kinds, setup.null, lo, hi, setup.options);
        }
        acc->add(data);
    };
    for (std::size_t d = 0; d < ndatasets; ++d) {
        if (config) {
            add(tcrank::simulate_dataset(*config, d));
        } else {
            add(load_labeled(inputs[d].first, inputs[d].second, skipped));
        }
    }

    {
        auto out = open_out(fs::path(s.out) / "fpfn_curves.csv");
        write_common_metadata(out, "compare", s, static_cast<bool>(config));
        out << "# datasets: " << acc->datasets() << "\n";
        out << "statistic,x,mean_fp,mean_fn\n";
        for (const auto& c : acc->curves()) {
            for (std::size_t i = 0; i < c.fp.size(); ++i) {
                out << c.statistic << ',' << c.x_min + i << ',' << fmt(c.fp[i]) << ',' << fmt(c.fn[i]) << '\n';
            }
        }
    }
    {
        auto out = open_out(fs::path(s.out) / "recovery.csv");
        out << "hyperparameter,truth,mean,sd,datasets\n";
        if (!acc->hypers().empty()) {
            for (const auto& r : tcrank::recovery_table(acc->hypers(), truth ? &*truth : nullptr)) {
                out << r.name << ',' << fmt(r.truth) << ',' << fmt(r.mean) << ',' << fmt(r.sd) << ',' << r.count << '\n';
            }
        }
    }
    {
        auto out = open_out(fs::path(s.out) / "failures.tsv");
        out << "failure\n";
        for (const auto& f : acc->failures()) {
            out << f << '\n';
        }
        for (const auto& f : skipped) {
            out << "ingest\t" << f << '\n';
        }
    }

    for (const auto& c : acc->curves()) {
        std::printf("%-22s FP+FN at x=%zu: %.2f\n", c.statistic.c_str(), c.x_min, c.fp.front() + c.fn.front());
    }
    if (acc->curves().empty()) {
        std::cerr << "tcrank: every statistic failed on every dataset\n";
        return exit_data;
    }
    return 0;
}

int cmd_sweep(const Settings& s) {
    auto setup = analysis(s);
    auto data = ingest(s);
    auto sums = tcrank::summarize_dataset(data.dataset, setup.null, setup.options);
    auto h = tcrank::fit_hyperparameters(sums, setup.options);
    const double baseline = s.baseline_nu.empty() ? h.nu : number(s.baseline_nu, "--baseline-nu");

    tcrank::SweepOptions opt;
    opt.top = s.top;
    auto rows = tcrank::moderation_sweep(sums.summaries, s.nu_grid, baseline, h.lambda, opt);

    fs::create_directories(s.out);
    auto out = open_out(fs::path(s.out) / "sweep.csv");
    write_common_metadata(out, "sweep", s, false);
    out << "# baseline_nu: " << fmt(baseline) << (s.baseline_nu.empty() ? " (estimated)" : " (user_set)") << "\n";
    out << "# lambda: " << tcrank::to_string(h.provenance.lambda) << "\n";
    out << "# top: " << std::min(s.top, sums.summaries.size()) << "\n";
    out << "nu,percent_moderation,rho_all,rho_top\n";
    for (const auto& r : rows) {
        out << fmt(r.nu) << ',' << fmt(r.percent_moderation) << ',' << fmt(r.rho_all) << ',' << fmt(r.rho_top) << '\n';
    }
    return 0;
}

void add_analysis_options(CLI::App* sub, Settings& s, Registered& reg, bool needs_input) {
    auto* in = sub->add_option("-i,--input", s.input, needs_input ? "Long-format CSV (gene,condition,replicate,time,value)" : "Directory written by the simulate command");
    reg.options["input"] = in;
    reg.options["design"] = sub->add_option("--design", s.design, "Null: zero, known-mean, constant, two-sample-paired or two-sample-unpaired");
    reg.options["nu"] = sub->add_option("--nu", s.nu, "Prior degrees of freedom (a number or inf)");
    reg.options["eta"] = sub->add_option("--eta", s.eta, "Precision ratio of the non-null mean prior");
    reg.options["p"] = sub->add_option("--p", s.p, "Prior proportion of non-null genes (default 0.02)");
    reg.options["lambda-file"] = sub->add_option("--lambda-file", s.lambda_file, "CSV file holding the common matrix");
    reg.options["contrast"] = sub->add_option("--contrast", s.contrast, "Contrast for the constant-mean null: helmert or first-difference");
    reg.options["mu0"] = sub->add_option("--mu0", s.mu0, "Known mean profile, comma separated");
    reg.options["threads"] = sub->add_option("--threads", s.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}

int tcrank::run_cli(int argc, char** argv) {
    CLI::App app{ "Rank genes from replicated time-course expression data" };
    app.set_version_flag("--version", tcrank::version);
    app.require_subcommand(1);

    Settings s;
    Registered reg;

    auto* rank = app.add_subcommand("rank", "Rank the genes of a dataset");
    auto* estimate = app.add_subcommand("estimate", "Estimate hyperparameters and write them as a configuration file");
    auto* simulate = app.add_subcommand("simulate", "Simulate datasets with truth sidecars");
    auto* compare = app.add_subcommand("compare", "Compare statistics on simulated datasets by FP/FN counts");
    auto* sweep = app.add_subcommand("sweep", "Correlation of T-squared rankings across prior degrees of freedom");

    for (auto* sub : { rank, estimate, simulate, compare, sweep }) {
        reg.options["out"] = sub->add_option("-o,--out", s.out, "Output directory");
        reg.options["config"] = sub->add_option("--config", s.config, "Configuration file of name = value lines; flags take precedence");
    }
    for (auto* sub : { rank, estimate, compare, sweep }) {
        add_analysis_options(sub, s, reg, sub != compare);
    }
    for (auto* sub : { rank, compare }) {
        reg.options["stat"] = sub->add_option("--stat", s.stats, "Statistics, comma separated");
        reg.options["sort"] = sub->add_option("--sort", s.sort, "Rank MB statistics by mb or t2");
    }
    for (auto* sub : { simulate, compare }) {
        reg.options["seed"] = sub->add_option("--seed", s.seed, "Random seed");
        reg.options["datasets"] = sub->add_option("--datasets", s.datasets, "Number of datasets");
        reg.options["genes"] = sub->add_option("--genes", s.genes, "Genes per dataset");
        reg.options["nonconstant"] = sub->add_option("--nonconstant", s.nonconstant, "Non-constant genes per dataset");
        reg.options["n"] = sub->add_option("--n", s.n, "Replicates per gene");
        reg.options["xi"] = sub->add_option("--xi", s.xi, "Prior degrees of freedom of the level variance");
        reg.options["lambda-sq"] = sub->add_option("--lambda-sq", s.lambda_sq, "Prior scale of the level variance");
        reg.options["theta"] = sub->add_option("--theta", s.theta, "Prior mean of the level");
        reg.options["kappa"] = sub->add_option("--kappa", s.kappa, "Precision ratio of the level prior");
        sub->add_flag("--shuffle", s.shuffle, "Shuffle gene order after placing non-constant genes first");
    }
    reg.options["nu"] = simulate->add_option("--nu", s.sim_nu, "Inverse-Wishart degrees of freedom (default 13)");
    reg.options["eta"] = simulate->add_option("--eta", s.sim_eta, "Precision ratio of the non-constant mean prior (default 0.08)");
    reg.options["lambda-file"] = simulate->add_option("--lambda-file", s.sim_lambda_file, "CSV file holding the common matrix of the k - 1 contrast channels");
    reg.options["design"] = simulate->add_option("--design", s.design, "Simulation design (constant)");
    reg.options["threads"] = simulate->add_option("--threads", s.threads, "Worker threads")->check(CLI::PositiveNumber);
    reg.options["sim-nu"] = compare->add_option("--sim-nu", s.sim_nu, "Simulation: inverse-Wishart degrees of freedom (default 13)");
    reg.options["sim-eta"] = compare->add_option("--sim-eta", s.sim_eta, "Simulation: precision ratio of the non-constant mean prior (default 0.08)");
    reg.options["sim-lambda-file"] = compare->add_option("--sim-lambda-file", s.sim_lambda_file, "Simulation: common matrix of the k - 1 contrast channels");
    compare->add_option("--x-min", s.x_min, "Smallest cutoff (default: number of non-null genes)");
    compare->add_option("--x-max", s.x_max, "Largest cutoff (default: twice the smallest)");
    reg.options["baseline-nu"] = sweep->add_option("--baseline-nu", s.baseline_nu, "Reference prior degrees of freedom (default: estimate)");
    sweep->add_option("--nu-grid", s.nu_grid, "Prior degrees of freedom to compare")->delimiter(',');
    sweep->add_option("--top", s.top, "Top genes of the baseline ranking for the restricted correlation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    // Options with the same name on several subcommands share a slot; keep the one that belongs to the chosen command.
    auto* chosen = app.get_subcommands().front();
    for (auto& entry : reg.options) {
        if (auto* own = chosen->get_option_no_throw("--" + entry.first)) {
            entry.second = own;
        }
    }
    // Simulations and comparisons default to the constant-mean null.
    if ((chosen == simulate || chosen == compare) && !reg.given("design")) {
        s.design = "constant";
    }

    try {
        merge_config(s, reg, chosen == simulate);
        if (chosen == rank) {
            return cmd_rank(s);
        } else if (chosen == estimate) {
            return cmd_estimate(s);
        } else if (chosen == simulate) {
            return cmd_simulate(s, reg);
        } else if (chosen == compare) {
            return cmd_compare(s, reg);
        } else {
            return cmd_sweep(s);
        }
    } catch (const tcrank::Error& e) {
        std::cerr << "tcrank: " << e.what() << "\n";
        switch (e.category()) {
            case tcrank::ErrorCategory::CONFIG:
                return exit_config;
            case tcrank::ErrorCategory::DATA:
                return exit_data;
            case tcrank::ErrorCategory::NUMERICAL:
                return exit_numerical;
        }
    } catch (const fs::filesystem_error& e) {
        std::cerr << "tcrank: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "tcrank: internal error: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_numerical;
}
