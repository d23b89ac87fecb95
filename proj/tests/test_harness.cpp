#include <doctest.h>

#include <sstream>

#include "copreg/commands.hpp"
#include "copreg/csvio.hpp"
#include "copreg/datagen.hpp"

using namespace copreg;

TEST_CASE("config parsing, overrides, and errors") {
    const Config cfg = Config::from_string(
        "# comment\n"
        "family = poisson\n"
        "rho = 0.3, 0.6 , 0.8\n"
        "seed=42\n"
        "flag = true\n");
    CHECK(cfg.require_str("family") == "poisson");
    CHECK(cfg.get_seed(0) == 42);
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_list("rho", {}) == std::vector<double>{0.3, 0.6, 0.8});
    CHECK(cfg.get_num("absent", 1.5) == 1.5);
    CHECK_THROWS_AS(cfg.require_str("absent"), config_error);
    CHECK_THROWS_AS(Config::from_string("no equals sign\n"), config_error);
    CHECK_THROWS_AS(cfg.get_num("family", 0.0), config_error);

    Config a = Config::from_string("x = 1\ny = 2\n");
    Config b = Config::from_string("y = 2\nx = 1\n");
    CHECK(a.hash() == b.hash());  // order-insensitive
    b.set("x", "3");
    CHECK(a.hash() != b.hash());
}

TEST_CASE("longitudinal csv round trip") {
    const std::string text =
        "id,y,trt,time\n"
        "a,0,1,0\n"
        "a,1,1,2\n"
        "a,1,1,5\n"
        "b,0,0,0\n"
        "b,0,0,3\n";
    std::istringstream in(text);
    std::vector<std::string> names;
    const Dataset data = read_longitudinal_csv(in, &names);
    REQUIRE(data.size() == 2);
    CHECK(names == std::vector<std::string>{"trt"});
    CHECK(data[0].dim() == 3);
    CHECK(data[0].X(0, 0) == 1.0);  // implicit intercept
    CHECK(data[0].X(2, 1) == 1.0);
    REQUIRE(data[0].times.has_value());
    CHECK((*data[0].times)[2] == 5.0);
    CHECK(data[1].y[0] == 0);

    std::ostringstream out;
    write_longitudinal_csv(out, data, names);
    std::istringstream back(out.str());
    const Dataset again = read_longitudinal_csv(back, nullptr);
    REQUIRE(again.size() == 2);
    CHECK(again[0].y == data[0].y);
    CHECK(again[0].X.isApprox(data[0].X));
}

TEST_CASE("csv errors carry row numbers") {
    std::istringstream missing("id,y\n1,0\n1\n");
    CHECK_THROWS_WITH_AS(read_longitudinal_csv(missing, nullptr),
                         doctest::Contains("row 3"), data_error);
    std::istringstream bad_time("id,y,time\n1,0,2\n1,0,1\n");
    CHECK_THROWS_WITH_AS(read_longitudinal_csv(bad_time, nullptr),
                         doctest::Contains("row 3"), data_error);
    std::istringstream neg("id,y\n1,-2\n");
    CHECK_THROWS_AS(read_longitudinal_csv(neg, nullptr), data_error);
    std::istringstream header("time,y\n");
    CHECK_THROWS_AS(read_longitudinal_csv(header, nullptr), data_error);
}

TEST_CASE("rectprob command: single cell, deterministic") {
    const Config cfg = Config::from_string(
        "d = 5\na = 1\nrho = 0.3\nengines = exch1d, gb\nseed = 3\n");
    const Table t = run_rectprob(cfg);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.columns[0] == "engine");
    const double exact = std::stod(t.rows[0][5]);
    const double gb = std::stod(t.rows[1][5]);
    CHECK(std::fabs(exact - 0.1755) < 5e-4);
    CHECK(std::fabs(gb - exact) < 0.002);

    const Table t2 = run_rectprob(cfg);
    for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(t.rows[r] == t2.rows[r]);
}

TEST_CASE("fit command end to end on simulated data") {
    SimDesign de;
    de.n = 80;
    de.d = 3;
    de.spec = {MarginalFamily::bernoulli_logit, CorrelationKind::exchangeable};
    de.truth.beta = Eigen::Vector2d(-0.5, 0.5);
    de.truth.rho = 0.5;
    de.seed = 4;
    const Dataset data = simulate(de);
    std::ostringstream csv;
    write_longitudinal_csv(csv, data, {"x1"});

    const Config cfg = Config::from_string(
        "family = bernoulli-logit\nstructure = exch\nseed = 11\n");
    std::istringstream in(csv.str());
    const Table t = run_fit(cfg, in);
    double rho_hat = -1.0, loglik = 1.0;
    for (const auto& row : t.rows) {
        if (row[0] == "rho") rho_hat = std::stod(row[1]);
        if (row[0] == "loglik") loglik = std::stod(row[1]);
    }
    CHECK(rho_hat > 0.15);
    CHECK(rho_hat < 0.85);
    CHECK(loglik < 0.0);
}

TEST_CASE("fit command refuses under-identified input") {
    const std::string csv = "id,y,x1\n1,0,0.5\n1,1,-0.5\n";
    const Config cfg = Config::from_string("family = bernoulli-logit\nstructure = exch\n");
    std::istringstream in(csv);
    CHECK_THROWS_AS(run_fit(cfg, in), data_error);
}

TEST_CASE("run_command maps exceptions to exit codes") {
    std::ostringstream log;
    CHECK(run_command("nope", Config::from_string(""), log) == exit_config);
    const Config bad = Config::from_string("design = bogus\n");
    CHECK(run_command("simstudy", bad, log) == exit_config);
    const Config nofile = Config::from_string("data = /nonexistent.csv\n");
    CHECK(run_command("fit", nofile, log) == exit_data);
}

TEST_CASE("simstudy jitter mode produces per-set rows") {
    const Config cfg = Config::from_string(
        "design = table6\nmode = jitters\nsets = 2\nm = 10\nseed = 5\ndata_seed = 9\n");
    const Table t = run_simstudy(cfg);
    // 1 reference fit + 2 sets x (hr, mf)
    CHECK(t.rows.size() == 5);
    int hr_rows = 0, mf_rows = 0;
    for (const auto& row : t.rows) {
        hr_rows += row[1] == "hr";
        mf_rows += row[1] == "mf";
    }
    CHECK(hr_rows == 2);
    CHECK(mf_rows == 2);
}
