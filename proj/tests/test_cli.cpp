// Integration tests spawning the built CLI binary: output contracts, exit
// codes, determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

const std::string kCli = CRR_CLI_PATH;
const std::string kHoes = std::string(CRR_DATA_DIR) + "/hoes.csv";

struct RunResult {
    int exit_code;
    std::string stdout_text;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
    const std::string cmd =
        kCli + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) text.append(buf.data(), got);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text};
}

double json_number(const nlohmann::json& j, std::initializer_list<const char*> path) {
    nlohmann::json cur = j;
    for (const char* key : path) cur = cur.at(key);
    return cur.get<double>();
}

}  // namespace

TEST_CASE("test subcommand prints the report block and exits zero") {
    const RunResult r = run("test --data " + kHoes + " --beta1-null 1");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("Estimate of beta1:") != std::string::npos);
    CHECK(r.stdout_text.find("WLS  0.60973   0.10892") != std::string::npos);
    CHECK(r.stdout_text.find("Hypothesis test for beta1:") != std::string::npos);
    CHECK(r.stdout_text.find("Wald statistic") != std::string::npos);
    CHECK(r.stdout_text.find("-3.5830787") != std::string::npos);
    CHECK(r.stdout_text.find("Skovgaard statistic") != std::string::npos);
    CHECK(r.stdout_text.find("alternative hypothesis: parameter is different from 1") !=
          std::string::npos);
}

TEST_CASE("test subcommand output is byte-stable") {
    const RunResult a = run("test --data " + kHoes + " --beta1-null 1");
    const RunResult b = run("test --data " + kHoes + " --beta1-null 1");
    CHECK(a.stdout_text == b.stdout_text);
}

TEST_CASE("json report carries the same numbers") {
    const RunResult r = run("test --data " + kHoes + " --beta1-null 1 --json");
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.stdout_text);
    CHECK(std::fabs(json_number(j, {"statistics", "wald", "value"}) - -3.5830787) < 1e-5);
    CHECK(std::fabs(json_number(j, {"estimates", "wls", "beta1"}) - 0.60973) < 1e-5);
    CHECK(std::fabs(json_number(j, {"statistics", "r_bar", "value"}) - -1.2709290) <
          5e-3 * 1.2709290);
    CHECK(j.at("converged").get<bool>());
}

TEST_CASE("one-sided test at the MLE gives a half p-value") {
    const RunResult fit = run("test --data " + kHoes + " --beta1-null 1 --json");
    const double beta1_mle =
        json_number(nlohmann::json::parse(fit.stdout_text), {"estimates", "mle", "beta1"});
    char args[256];
    std::snprintf(args, sizeof(args), "test --data %s --beta1-null %.10f --alternative less --json",
                  kHoes.c_str(), beta1_mle);
    const RunResult r = run(args);
    const auto j = nlohmann::json::parse(r.stdout_text);
    CHECK(std::fabs(json_number(j, {"statistics", "r_p", "p"}) - 0.5) < 0.02);
}

TEST_CASE("missing required arguments exit 2 with usage text") {
    const RunResult r = run("test --beta1-null 1", true);
    CHECK(r.exit_code == 2);
    CHECK(r.stdout_text.find("--data") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
    std::ofstream("/tmp/crr_cli_bad.csv")
        << "deaths_treated,py_treated,deaths_control,py_control\n1,10,2,0\n3,30,4,40\n";
    const RunResult r = run("test --data /tmp/crr_cli_bad.csv --beta1-null 1", true);
    CHECK(r.exit_code == 2);
    const RunResult missing = run("test --data /nonexistent.csv --beta1-null 1", true);
    CHECK(missing.exit_code == 2);
}

TEST_CASE("an exhausted optimizer budget exits 3 but still reports") {
    const RunResult r = run("test --data " + kHoes + " --beta1-null 1 --maxit 30");
    CHECK(r.exit_code == 3);
    CHECK(r.stdout_text.find("Estimate of beta1:") != std::string::npos);
}

TEST_CASE("confint lines are tab-separated and ordered") {
    const RunResult r = run("confint --data " + kHoes + " --statistic rp");
    CHECK(r.exit_code == 0);
    double level, lo, hi;
    char name[16];
    REQUIRE(std::sscanf(r.stdout_text.c_str(), "%15s\t%lf\t%lf\t%lf", name, &level, &lo, &hi) ==
            4);
    CHECK(std::string(name) == "rp");
    CHECK(level == doctest::Approx(0.95));
    CHECK(std::fabs(lo - 0.45) < 0.01);
    CHECK(std::fabs(hi - 0.93) < 0.01);
}

TEST_CASE("confint all prints three statistics") {
    const RunResult r = run("confint --data " + kHoes + " --statistic all");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("wald\t") != std::string::npos);
    CHECK(r.stdout_text.find("rp\t") != std::string::npos);
    CHECK(r.stdout_text.find("rbar\t") != std::string::npos);
}

TEST_CASE("simulate is deterministic across worker counts") {
    const std::string args = "simulate --scenario 1 --n-list 5 --tau-list 2.0 "
                             "--replicates 60 --seed 7";
    const RunResult w1 = run(args + " --workers 1");
    const RunResult w2 = run(args + " --workers 2");
    CHECK(w1.exit_code == 0);
    CHECK(w1.stdout_text == w2.stdout_text);
    CHECK(w1.stdout_text.find("scenario,n,tau,sigma,method,coverage") != std::string::npos);
}

TEST_CASE("conflicting simulate flags exit 2") {
    const RunResult both =
        run("simulate --scenario 1 --beta1 0.5 --n-list 5 --replicates 2", true);
    CHECK(both.exit_code == 2);
    const RunResult lists = run(
        "simulate --scenario 1 --n-list 5 --tau-list 1 --sigma-list 1 --replicates 2", true);
    CHECK(lists.exit_code == 2);
    const RunResult neither = run("simulate --n-list 5 --replicates 2", true);
    CHECK(neither.exit_code == 2);
}

TEST_CASE("simulate writes the CSV to a file on request") {
    const std::string out = "/tmp/crr_cli_grid.csv";
    std::remove(out.c_str());
    const RunResult r = run("simulate --scenario 2 --n-list 5 --tau-list 0.5 --replicates 20 "
                            "--seed 3 --out " + out);
    CHECK(r.exit_code == 0);
    std::ifstream in(out);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "scenario,n,tau,sigma,method,coverage,mc_se,failures,replicates");
}

TEST_CASE("re-example reports the null-at-MLE degeneracies") {
    const RunResult r = run("re-example --y 0,2 --sigma2 0.5 --upsilon-null 1");
    CHECK(r.exit_code == 0);
    CHECK(r.stdout_text.find("r\t0.0000000") != std::string::npos);
    CHECK(r.stdout_text.find("q\t0.0000000\t0.0000000") != std::string::npos);
}

TEST_CASE("re-example prints an exactly zero S_omega_upsilon") {
    const RunResult r = run("re-example --y 0,1,2,3 --sigma2 0.5 --upsilon-null 0");
    CHECK(r.exit_code == 0);
    // S row-major: S_uu S_uo S_ou S_oo
    double s[4];
    const auto pos = r.stdout_text.find("S\t");
    REQUIRE(pos != std::string::npos);
    REQUIRE(std::sscanf(r.stdout_text.c_str() + pos, "S\t%lf\t%lf\t%lf\t%lf", &s[0], &s[1],
                        &s[2], &s[3]) == 4);
    CHECK(s[2] == 0.0);
}

TEST_CASE("re-example statistic is invariant to a common shift") {
    const RunResult a = run("re-example --y 0,1,2,3 --sigma2 0.5 --upsilon-null 0");
    const RunResult b = run("re-example --y 10,11,12,13 --sigma2 0.5 --upsilon-null 10");
    auto stat_lines = [](const std::string& text) {
        const auto r_pos = text.find("r\t");
        const auto u_pos = text.find("u\t");
        return text.substr(r_pos, text.find('\n', u_pos) - r_pos);
    };
    CHECK(stat_lines(a.stdout_text) == stat_lines(b.stdout_text));
}

TEST_CASE("re-example rejects short inputs with exit 2") {
    const RunResult r = run("re-example --y 1 --sigma2 0.5 --upsilon-null 0", true);
    CHECK(r.exit_code == 2);
}
