#include "okp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "okp/precision_opt.hpp"

namespace okp {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& v) { return std::stod(v); }
int to_int(const std::string& v) { return std::stoi(v); }
bool to_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("expected boolean, got '" + v + "'");
}

const std::map<std::string, std::map<std::string, Setter>>& config_schema() {
    static const std::map<std::string, std::map<std::string, Setter>> schema = {
        {"dataset",
         {
             {"kind", [](auto& c, const auto& v) { c.dataset = v; }},
             {"path", [](auto& c, const auto& v) { c.path = v; }},
             {"n_samples", [](auto& c, const auto& v) { c.n_samples = to_int(v); }},
             {"train_end", [](auto& c, const auto& v) { c.train_end = to_int(v); }},
             {"test_end", [](auto& c, const auto& v) { c.test_end = to_int(v); }},
             {"val_start", [](auto& c, const auto& v) { c.val_start = to_int(v); }},
             {"val_end", [](auto& c, const auto& v) { c.val_end = to_int(v); }},
             {"normalize", [](auto& c, const auto& v) { c.normalize = to_bool(v); }},
         }},
        {"algorithm",
         {
             {"sparsifier", [](auto& c, const auto& v) { c.sparsifier = v; }},
             {"updater", [](auto& c, const auto& v) { c.updater = v; }},
             {"nu1", [](auto& c, const auto& v) { c.nu1 = to_double(v); }},
             {"nu2", [](auto& c, const auto& v) { c.nu2 = to_double(v); }},
             {"nu3", [](auto& c, const auto& v) { c.nu3 = to_double(v); }},
             {"lambda", [](auto& c, const auto& v) { c.lambda = to_double(v); }},
             {"beta", [](auto& c, const auto& v) { c.beta = to_double(v); }},
             {"p", [](auto& c, const auto& v) { c.p = to_int(v); }},
             {"eta", [](auto& c, const auto& v) { c.eta = to_double(v); }},
             {"rec_lambda", [](auto& c, const auto& v) { c.rec_lambda = to_double(v); }},
             {"h0", [](auto& c, const auto& v) { c.h0 = to_double(v); }},
             {"precision_scale",
              [](auto& c, const auto& v) { c.precision_scale = to_double(v); }},
             {"m", [](auto& c, const auto& v) { c.m = to_int(v); }},
         }},
        {"topology",
         {
             {"depth", [](auto& c, const auto& v) { c.depth = to_int(v); }},
             {"partition", [](auto& c, const auto& v) { c.partition = v; }},
             {"cascade_updater",
              [](auto& c, const auto& v) { c.cascade_updater = v; }},
             {"q", [](auto& c, const auto& v) { c.q = to_int(v); }},
             {"beta2", [](auto& c, const auto& v) { c.beta2 = to_double(v); }},
             {"auto_depth", [](auto& c, const auto& v) { c.auto_depth = to_bool(v); }},
         }},
        {"precision_opt",
         {
             {"mode",
              [](auto& c, const auto& v) {
                  if (v == "off") c.popt_mode = PrecisionOptMode::Off;
                  else if (v == "alg1") c.popt_mode = PrecisionOptMode::Alg1;
                  else if (v == "alg2") c.popt_mode = PrecisionOptMode::Alg2;
                  else throw std::invalid_argument("precision_opt.mode: '" + v + "'");
              }},
             {"generations",
              [](auto& c, const auto& v) { c.popt_generations = to_int(v); }},
             {"sigma0", [](auto& c, const auto& v) { c.popt_sigma0 = to_double(v); }},
             {"omega", [](auto& c, const auto& v) { c.omega_scheme = v; }},
             {"sign", [](auto& c, const auto& v) { c.popt_sign = to_int(v); }},
         }},
        {"run",
         {
             {"seed",
              [](auto& c, const auto& v) { c.seed = std::stoull(v); }},
             {"out", [](auto& c, const auto& v) { c.out_dir = v; }},
             {"format", [](auto& c, const auto& v) { c.format = v; }},
         }},
    };
    return schema;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    const auto& schema = config_schema();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                throw std::invalid_argument("unknown config section '" + section +
                                            "' (line " + std::to_string(lineno) + ")");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw std::invalid_argument("key '" + key + "' outside any section");
        const auto& keys = schema.at(section);
        const auto it = keys.find(key);
        if (it == keys.end())
            throw std::invalid_argument("unknown key '" + section + "." + key + "'");
        it->second(cfg, value);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::pair<double, double> compute_metrics(const std::vector<double>& errors) {
    if (errors.empty()) return {0.0, 0.0};
    double abs_sum = 0.0, sq_sum = 0.0;
    for (double e : errors) {
        abs_sum += std::abs(e);
        sq_sum += e * e;
    }
    const double n = static_cast<double>(errors.size());
    return {abs_sum / n, sq_sum / n};
}

std::vector<TimeSeriesRecord> gen_sunspot_surrogate(int n_samples) {
    // Solar-cycle shaped deterministic stand-in: ~11-year cycles with
    // amplitude modulation and a bounded deterministic ripple.
    std::vector<TimeSeriesRecord> out;
    out.reserve(static_cast<size_t>(n_samples));
    for (int n = 0; n < n_samples; ++n) {
        const double cycle = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / 132.0);
        const double amp = 90.0 + 55.0 * std::sin(2.0 * M_PI * n / 1320.0 + 0.7);
        const double ripple = 6.0 * std::sin(0.9 * n) * std::sin(0.17 * n + 1.3);
        const double v = std::max(0.0, amp * std::pow(cycle, 1.4) + ripple);
        Eigen::VectorXd s(1);
        s(0) = v;
        out.push_back({n, s});
    }
    return out;
}

namespace {

std::vector<int> parse_partition(const std::string& text, int m) {
    if (text == "flat" || text.empty()) return {};
    const auto x_pos = text.find('x');
    if (x_pos != std::string::npos && text.front() != '(') {
        // "1x6": six parallel groups of one node each (size x count).
        const int size = std::stoi(text.substr(0, x_pos));
        const int count = std::stoi(text.substr(x_pos + 1));
        return std::vector<int>(static_cast<size_t>(count), size);
    }
    std::string body = text;
    if (!body.empty() && body.front() == '(') body = body.substr(1);
    if (!body.empty() && body.back() == ')') body.pop_back();
    std::vector<int> part;
    std::istringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, ',')) part.push_back(std::stoi(trim(tok)));
    (void)m;
    return part;
}

UpdaterKind parse_updater(const std::string& name) {
    if (name == "krls") return UpdaterKind::Krls;
    if (name == "mrls") return UpdaterKind::Mrls;
    if (name == "recurrent_grad") return UpdaterKind::RecurrentGrad;
    if (name == "linear_rls") return UpdaterKind::LinearRls;
    if (name == "last_error") return UpdaterKind::LastError;
    throw std::invalid_argument("unknown updater '" + name + "'");
}

SparsifierKind parse_sparsifier(const std::string& name) {
    if (name == "ald") return SparsifierKind::Ald;
    if (name == "distance") return SparsifierKind::Distance;
    if (name == "ofs") return SparsifierKind::Ofs;
    if (name == "none") return SparsifierKind::None;
    throw std::invalid_argument("unknown sparsifier '" + name + "'");
}

struct Splits {
    std::vector<Eigen::VectorXd> train_x, test_x, val_x;
    std::vector<double> train_y, test_y, val_y;
    std::vector<int> test_n;
    int input_dim = 0;
};

Splits split_pairs(const std::vector<SupervisedPair>& pairs,
                   const ExperimentConfig& cfg) {
    Splits s;
    for (const auto& pr : pairs) {
        if (pr.n < cfg.train_end) {
            s.train_x.push_back(pr.x);
            s.train_y.push_back(pr.y);
            if (pr.n >= cfg.val_start && pr.n < cfg.val_end) {
                s.val_x.push_back(pr.x);
                s.val_y.push_back(pr.y);
            }
        } else if (pr.n < cfg.test_end) {
            s.test_x.push_back(pr.x);
            s.test_y.push_back(pr.y);
            s.test_n.push_back(pr.n);
        }
    }
    if (s.train_x.empty() || s.test_x.empty())
        throw std::invalid_argument("dataset split produced an empty span");
    s.input_dim = static_cast<int>(s.train_x.front().size());
    return s;
}

std::vector<SupervisedPair> build_pairs(const ExperimentConfig& cfg) {
    if (cfg.dataset == "lorenz") {
        const auto series = gen_lorenz(cfg.n_samples);
        return make_supervised(series, InputSpec{{0, 1, 2}, 0}, 5, 1);
    }
    if (cfg.dataset == "rlc") {
        const auto series = gen_rlc(cfg.n_samples);
        return make_supervised(series, InputSpec{{0, 1}, 0}, 1, 1);
    }
    if (cfg.dataset == "sunspot" || cfg.dataset == "csv") {
        const auto series = cfg.path.empty() && cfg.dataset == "sunspot"
                                ? gen_sunspot_surrogate()
                                : load_sunspot(cfg.path);
        InputSpec spec;
        spec.lags = 4;
        return make_supervised(series, spec, 1, 0);
    }
    throw std::invalid_argument("unknown dataset '" + cfg.dataset + "'");
}

std::string echo_config(const ExperimentConfig& c) {
    std::ostringstream ss;
    ss << "dataset=" << c.dataset << " sparsifier=" << c.sparsifier
       << " updater=" << c.updater << " nu1=" << c.nu1 << " nu2=" << c.nu2
       << " lambda=" << c.lambda << " beta=" << c.beta << " p=" << c.p
       << " h0=" << c.h0 << " precision_scale=" << c.precision_scale
       << " m=" << c.m << " depth=" << c.depth << " partition=" << c.partition
       << " cascade=" << c.cascade_updater << " q=" << c.q
       << " beta2=" << c.beta2 << " popt="
       << (c.popt_mode == PrecisionOptMode::Off
               ? "off"
               : (c.popt_mode == PrecisionOptMode::Alg1 ? "alg1" : "alg2"))
       << " seed=" << c.seed;
    return ss.str();
}

}  // namespace

MetricsReport run_experiment(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    auto pairs = build_pairs(config);
    Splits splits = split_pairs(pairs, config);

    if (config.normalize) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(splits.input_dim);
        for (const auto& x : splits.train_x) mean += x;
        mean /= static_cast<double>(splits.train_x.size());
        Eigen::VectorXd var = Eigen::VectorXd::Zero(splits.input_dim);
        for (const auto& x : splits.train_x)
            var += (x - mean).cwiseAbs2();
        var /= static_cast<double>(splits.train_x.size());
        const Eigen::VectorXd sd =
            var.cwiseSqrt().cwiseMax(1e-12);
        const auto scale = [&](std::vector<Eigen::VectorXd>& xs) {
            for (auto& x : xs) x = (x - mean).cwiseQuotient(sd).eval();
        };
        scale(splits.train_x);
        scale(splits.val_x);
        scale(splits.test_x);
    }

    TopologyConfig top;
    top.kernel = KernelConfig::isotropic(splits.input_dim,
                                         config.precision_scale, config.h0);
    top.sparsifier = parse_sparsifier(config.sparsifier);
    top.nu1 = config.nu1;
    if (config.nu2 >= 0.0) top.nu2 = config.nu2;
    if (config.m > 0) top.m = config.m;
    top.stage1_updater = parse_updater(config.updater);
    top.lambda = config.lambda;
    top.beta = config.beta;
    top.p = config.p;
    top.eta = config.eta;
    top.rec_lambda_scale = config.rec_lambda;
    top.cascade_depth = config.depth;
    top.cascade_updater = parse_updater(config.cascade_updater);
    top.q = config.q;
    top.beta2 = config.beta2;
    top.auto_depth = config.auto_depth;

    // Partition needs the realized dictionary size up front.
    {
        Dictionary probe = select_dictionary(top, splits.train_x, splits.train_y);
        top.partition = parse_partition(config.partition, probe.size());
        if (!top.partition.empty() &&
            std::accumulate(top.partition.begin(), top.partition.end(), 0) !=
                probe.size())
            throw std::invalid_argument(
                "topology.partition sizes sum to a different value than the "
                "selected dictionary size " + std::to_string(probe.size()));
    }

    if (config.popt_mode != PrecisionOptMode::Off) {
        const auto& dx = splits.val_x.empty() ? splits.train_x : splits.val_x;
        const auto& dy = splits.val_y.empty() ? splits.train_y : splits.val_y;
        PipelineConfig pcfg;
        pcfg.sparsifier = top.sparsifier == SparsifierKind::Distance
                              ? SparsifierKind::Distance
                              : SparsifierKind::Ald;
        pcfg.updater = top.stage1_updater == UpdaterKind::Mrls
                           ? UpdaterKind::Mrls
                           : UpdaterKind::Krls;
        pcfg.nu1 = top.nu1;
        pcfg.nu2 = top.nu2.value_or(0.1);
        pcfg.max_size = top.m;
        pcfg.lambda = top.lambda;
        pcfg.beta = top.beta;
        pcfg.p = top.p;
        pcfg.h0 = config.h0;
        pcfg.sign = config.popt_sign;
        const Eigen::VectorXd omega = make_omega(
            static_cast<int>(dx.size()), config.omega_scheme == "exponential");
        PrecisionOptConfig poc;
        poc.max_generations = config.popt_generations;
        poc.sigma0 = config.popt_sigma0;
        top.kernel.precision =
            config.popt_mode == PrecisionOptMode::Alg1
                ? optimize_precision_ald(pcfg, top.kernel.precision, dx, dy,
                                         omega, poc, config.seed)
                : optimize_precision_fixed_dict(pcfg, top.kernel.precision, dx,
                                                dy, omega, poc, config.seed);
    }

    ConnectionGraph graph = train_construct(top, splits.train_x, splits.train_y);

    MetricsReport report;
    report.predictions.resize(static_cast<size_t>(graph.depth()));
    report.errors.resize(static_cast<size_t>(graph.depth()));
    for (size_t i = 0; i < splits.test_x.size(); ++i) {
        const double y = splits.test_y[i];
        const auto errors = graph.step(splits.test_x[i], y);
        if (errors.empty()) continue;  // skipped sample
        report.test_y.push_back(y);
        report.test_index.push_back(splits.test_n[i]);
        for (int d = 0; d < graph.depth(); ++d) {
            report.errors[static_cast<size_t>(d)].push_back(
                errors[static_cast<size_t>(d)]);
            report.predictions[static_cast<size_t>(d)].push_back(
                y - errors[static_cast<size_t>(d)]);
        }
    }
    for (int d = 0; d < graph.depth(); ++d) {
        const auto [mae, mse] =
            compute_metrics(report.errors[static_cast<size_t>(d)]);
        report.mae.push_back(mae);
        report.mse.push_back(mse);
    }
    report.best_depth = 1;
    for (int d = 1; d < graph.depth(); ++d)
        if (report.mse[static_cast<size_t>(d)] <
            report.mse[static_cast<size_t>(report.best_depth - 1)])
            report.best_depth = d + 1;
    report.config_echo = echo_config(config);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

void write_report(const ExperimentConfig& config, const MetricsReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const char sep = config.format == "tsv" ? '\t' : ',';
    const std::string ext = config.format == "tsv" ? ".tsv" : ".csv";

    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };

    std::ofstream rep(fs::path(config.out_dir) / ("report" + ext));
    rep << "depth" << sep << "MAE" << sep << "MSE\n";
    for (size_t d = 0; d < report.mae.size(); ++d)
        rep << (d + 1) << sep << fmt(report.mae[d]) << sep << fmt(report.mse[d])
            << '\n';
    rep << "# best_depth=" << report.best_depth << '\n';
    rep << "# " << report.config_echo << '\n';

    for (size_t d = 0; d < report.errors.size(); ++d) {
        std::ofstream tr(fs::path(config.out_dir) /
                         ("trace_depth" + std::to_string(d + 1) + ext));
        tr << 'n' << sep << 'y' << sep << "prediction" << sep << "error\n";
        for (size_t i = 0; i < report.errors[d].size(); ++i)
            tr << report.test_index[i] << sep << fmt(report.test_y[i]) << sep
               << fmt(report.predictions[d][i]) << sep << fmt(report.errors[d][i])
               << '\n';
    }
}

}  // namespace okp
