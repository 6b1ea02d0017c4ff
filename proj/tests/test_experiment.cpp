#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "okp/experiment.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

okp::ExperimentConfig small_rlc_config() {
    okp::ExperimentConfig cfg;
    cfg.dataset = "rlc";
    cfg.n_samples = 700;
    cfg.train_end = 300;
    cfg.test_end = 700;
    cfg.val_start = 200;
    cfg.val_end = 300;
    cfg.nu1 = 0.01;
    cfg.depth = 3;
    return cfg;
}

}  // namespace

TEST_CASE("config parser reads every section") {
    const std::string text = R"(
# comment
[dataset]
kind = rlc
n_samples = 600
train_end = 300   # trailing comment
test_end = 600
normalize = true

[algorithm]
sparsifier = distance
updater = mrls
nu2 = 0.25
beta = 0.95
p = 2
h0 = 2.0

[topology]
depth = 4
partition = (3,3)
cascade_updater = linear_rls
q = 2

[precision_opt]
mode = alg2
generations = 7
omega = exponential

[run]
seed = 42
format = tsv
)";
    const auto cfg = okp::parse_config_text(text);
    CHECK(cfg.dataset == "rlc");
    CHECK(cfg.n_samples == 600);
    CHECK(cfg.normalize);
    CHECK(cfg.sparsifier == "distance");
    CHECK(cfg.updater == "mrls");
    CHECK(cfg.nu2 == 0.25);
    CHECK(cfg.beta == 0.95);
    CHECK(cfg.p == 2);
    CHECK(cfg.h0 == 2.0);
    CHECK(cfg.depth == 4);
    CHECK(cfg.partition == "(3,3)");
    CHECK(cfg.cascade_updater == "linear_rls");
    CHECK(cfg.q == 2);
    CHECK(cfg.popt_mode == okp::PrecisionOptMode::Alg2);
    CHECK(cfg.popt_generations == 7);
    CHECK(cfg.omega_scheme == "exponential");
    CHECK(cfg.seed == 42);
    CHECK(cfg.format == "tsv");
}

TEST_CASE("config parser rejects unknown keys with names") {
    CHECK_THROWS_WITH_AS(okp::parse_config_text("[dataset]\nbogus = 1\n"),
                         doctest::Contains("bogus"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(okp::parse_config_text("[nope]\n"),
                         doctest::Contains("nope"), std::invalid_argument);
    CHECK_THROWS_AS(okp::parse_config_text("kind = rlc\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(okp::parse_config_text("[dataset]\nno_equals_here\n"),
                    std::invalid_argument);
}

TEST_CASE("compute_metrics closed forms") {
    SUBCASE("unit errors") {
        const auto [mae, mse] = okp::compute_metrics({1.0, -1.0});
        CHECK(mae == 1.0);
        CHECK(mse == 1.0);
    }
    SUBCASE("sparse errors") {
        const auto [mae, mse] = okp::compute_metrics({3.0, 0.0, 0.0});
        CHECK(mae == 1.0);
        CHECK(mse == 3.0);
    }
    SUBCASE("matches an independent two-pass computation") {
        std::vector<double> e{0.3, -1.2, 0.8, 0.05, -0.4};
        double abs_sum = 0.0, sq_sum = 0.0;
        for (double v : e) {
            abs_sum += std::abs(v);
            sq_sum += v * v;
        }
        const auto [mae, mse] = okp::compute_metrics(e);
        CHECK(mae == doctest::Approx(abs_sum / 5.0).epsilon(1e-14));
        CHECK(mse == doctest::Approx(sq_sum / 5.0).epsilon(1e-14));
    }
}

TEST_CASE("mae bounded by rms per depth") {
    const auto report = okp::run_experiment(small_rlc_config());
    for (size_t d = 0; d < report.mae.size(); ++d)
        CHECK(report.mae[d] <= std::sqrt(report.mse[d]) + 1e-12);
}

TEST_CASE("noiseless linear stream is learned nearly exactly") {
    // A sinusoid obeys an exact 2-term linear recurrence in its lags, so
    // depth-1 ALD-KRLS should drive the prequential test error to ~1e-6.
    const std::string path = "/tmp/okp_sine_stream.csv";
    {
        std::ofstream out(path);
        out << "date,value\n";
        for (int i = 0; i < 2300; ++i)
            out << i << ',' << 1.0 + std::sin(0.02 * i) << '\n';
    }
    okp::ExperimentConfig cfg;
    cfg.dataset = "csv";
    cfg.path = path;
    cfg.train_end = 500;
    cfg.test_end = 2300;
    cfg.val_start = 300;
    cfg.val_end = 500;
    cfg.nu1 = 0.002;
    cfg.depth = 1;
    cfg.normalize = true;
    const auto report = okp::run_experiment(cfg);
    CHECK(report.mse[0] <= 1e-6);
    fs::remove(path);
}

TEST_CASE("report files are recomputable and deterministic") {
    okp::ExperimentConfig cfg = small_rlc_config();
    cfg.out_dir = "/tmp/okp_report_a";
    const auto report = okp::run_experiment(cfg);
    okp::write_report(cfg, report);

    SUBCASE("metrics recompute from the traces") {
        for (size_t d = 0; d < report.errors.size(); ++d) {
            const auto text = read_file(
                fs::path(cfg.out_dir) /
                ("trace_depth" + std::to_string(d + 1) + ".csv"));
            std::istringstream in(text);
            std::string line;
            std::getline(in, line);  // header
            double abs_sum = 0.0, sq_sum = 0.0;
            int count = 0;
            while (std::getline(in, line)) {
                const auto last = line.rfind(',');
                const double err = std::stod(line.substr(last + 1));
                abs_sum += std::abs(err);
                sq_sum += err * err;
                ++count;
            }
            REQUIRE(count == static_cast<int>(report.errors[d].size()));
            CHECK(report.mae[d] ==
                  doctest::Approx(abs_sum / count).epsilon(1e-9));
            CHECK(report.mse[d] ==
                  doctest::Approx(sq_sum / count).epsilon(1e-9));
        }
    }

    SUBCASE("identical config and seed give byte-identical reports") {
        okp::ExperimentConfig cfg2 = cfg;
        cfg2.out_dir = "/tmp/okp_report_b";
        const auto report2 = okp::run_experiment(cfg2);
        okp::write_report(cfg2, report2);
        CHECK(read_file(fs::path(cfg.out_dir) / "report.csv") ==
              read_file(fs::path(cfg2.out_dir) / "report.csv"));
        CHECK(read_file(fs::path(cfg.out_dir) / "trace_depth1.csv") ==
              read_file(fs::path(cfg2.out_dir) / "trace_depth1.csv"));
        fs::remove_all(cfg2.out_dir);
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("tsv format switches the separator") {
    okp::ExperimentConfig cfg = small_rlc_config();
    cfg.depth = 1;
    cfg.format = "tsv";
    cfg.out_dir = "/tmp/okp_report_tsv";
    const auto report = okp::run_experiment(cfg);
    okp::write_report(cfg, report);
    const auto text = read_file(fs::path(cfg.out_dir) / "report.tsv");
    CHECK(text.find('\t') != std::string::npos);
    CHECK(text.rfind("depth\tMAE\tMSE", 0) == 0);
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("sunspot surrogate experiment runs the documented split") {
    okp::ExperimentConfig cfg;
    cfg.dataset = "sunspot";
    cfg.n_samples = 2280;
    cfg.train_end = 500;
    cfg.test_end = 2280;
    cfg.val_start = 300;
    cfg.val_end = 500;
    cfg.normalize = true;
    cfg.nu1 = 0.01;
    cfg.depth = 2;
    cfg.cascade_updater = "linear_rls";
    cfg.q = 4;
    const auto report = okp::run_experiment(cfg);
    REQUIRE(report.mse.size() == 2);
    CHECK(std::isfinite(report.mse[0]));
    CHECK(std::isfinite(report.mse[1]));
    CHECK(report.test_index.front() >= 500);
    CHECK(report.test_index.back() < 2280);
}

TEST_CASE("invalid dataset and partition are rejected by name") {
    okp::ExperimentConfig cfg = small_rlc_config();
    cfg.dataset = "unknown_set";
    CHECK_THROWS_WITH_AS(okp::run_experiment(cfg),
                         doctest::Contains("unknown_set"),
                         std::invalid_argument);
    cfg = small_rlc_config();
    cfg.partition = "(1,1)";  // will not match the selected size
    CHECK_THROWS_AS(okp::run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("precision optimization modes run end to end") {
    okp::ExperimentConfig cfg = small_rlc_config();
    cfg.depth = 1;
    cfg.normalize = true;
    cfg.precision_scale = 0.05;
    cfg.popt_generations = 3;
    for (const auto mode :
         {okp::PrecisionOptMode::Alg1, okp::PrecisionOptMode::Alg2}) {
        cfg.popt_mode = mode;
        const auto report = okp::run_experiment(cfg);
        CHECK(std::isfinite(report.mse[0]));
    }
}
