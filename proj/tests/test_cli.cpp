#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "test_support.hpp"
#include "unmix/matrix_io.hpp"

using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) { return unmix::cli::run(args); }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

} // namespace

TEST_CASE("synth writes the scene files and a manifest")
{
    TempDir dir("cli");
    const auto out = dir.path() / "s";
    REQUIRE(cli({"synth", "--endmembers", "3", "--pixels", "100", "--bands", "420", "--snr", "50", "--seed", "1",
                 "-o", out.string()}) == 0);
    for (const char* f : {"scene.hsm", "A.hsm", "R.hsm", "manifest.json", "X_true.hsm", "endmember_indices.csv"}) {
        CHECK(fs::exists(out / f));
    }
    const auto m = manifest(out);
    CHECK(m["command"] == "synth");
    CHECK(m["seed"] == 1);
    CHECK(m["params"]["snr_db"] == 50.0);
    CHECK(m.contains("duration_seconds"));
    const auto scene = unmix::read_matrix(out / "scene.hsm");
    CHECK(scene.rows() == 420);
    CHECK(scene.cols() == 100);
}

TEST_CASE("usage errors exit with code 2")
{
    CHECK(cli({"synth", "--endmembers", "3", "--pixels", "10"}) == unmix::cli::kUsage);
    CHECK(cli({"frobnicate"}) == unmix::cli::kUsage);
    CHECK(cli({"unmix", "--algo", "other", "--scene", "x", "-o", "y"}) == unmix::cli::kUsage);
}

TEST_CASE("missing input files exit with code 1")
{
    TempDir dir("cli");
    CHECK(cli({"unmix", "--algo", "glup", "--scene", (dir.path() / "none.hsm").string(), "-o",
               (dir.path() / "u").string()}) == unmix::cli::kFailure);
}

TEST_CASE("glup, detect, fcls, nfindr and metrics pipeline")
{
    TempDir dir("cli");
    const auto s = (dir.path() / "s").string();
    const auto u = (dir.path() / "u").string();
    const auto d = (dir.path() / "d").string();
    REQUIRE(cli({"synth", "--endmembers", "3", "--pixels", "40", "--bands", "80", "--snr", "40", "--seed", "2", "-o",
                 s}) == 0);
    REQUIRE(cli({"unmix", "--algo", "glup", "--scene", s + "/scene.hsm", "-o", u}) == 0);
    CHECK(manifest(u)["solver"]["converged"] == true);
    CHECK(fs::exists(fs::path(u) / "row_means.csv"));

    REQUIRE(cli({"detect", "--x", u + "/X.hsm", "--scene", s + "/scene.hsm", "--threshold", "0.01",
                 "--max-coherence", "0.95", "-o", d}) == 0);
    CHECK(manifest(d)["result"]["m_hat"] == 3);
    auto found = manifest(d)["result"]["pixel_indices"].get<std::vector<int>>();
    std::sort(found.begin(), found.end());
    CHECK(found == std::vector<int>{1, 2, 3});

    const auto f = (dir.path() / "f").string();
    REQUIRE(cli({"fcls", "--scene", s + "/scene.hsm", "--endmembers", d + "/spectra.hsm", "-o", f}) == 0);
    const auto abund = unmix::read_matrix(fs::path(f) / "abundances.hsm");
    CHECK(abund.rows() == 3);
    CHECK(abund.cols() == 40);

    const auto n1 = (dir.path() / "n1").string();
    const auto n2 = (dir.path() / "n2").string();
    REQUIRE(cli({"nfindr", "--scene", s + "/scene.hsm", "--m", "3", "--seed", "7", "-o", n1}) == 0);
    REQUIRE(cli({"nfindr", "--scene", s + "/scene.hsm", "--m", "3", "--seed", "7", "-o", n2}) == 0);
    CHECK(slurp(fs::path(n1) / "endmembers.csv") == slurp(fs::path(n2) / "endmembers.csv"));

    const auto m = (dir.path() / "m").string();
    REQUIRE(cli({"metrics", "--estimate", s + "/X_true.hsm", "--truth", s + "/X_true.hsm", "-o", m}) == 0);
    CHECK(manifest(m)["result"]["rmse_n2"] == 0.0);
}

TEST_CASE("glup with mu = 0 on a noise-free scene gives the identity")
{
    TempDir dir("cli");
    const auto s = (dir.path() / "s").string();
    const auto u = (dir.path() / "u").string();
    // With L > N the noise-free pixels are linearly independent.
    REQUIRE(cli({"synth", "--endmembers", "3", "--pixels", "3", "--bands", "50", "--seed", "3", "-o", s}) == 0);
    REQUIRE(cli({"unmix", "--algo", "glup", "--mu", "0", "--all", "--eps", "1e-7", "--scene", s + "/scene.hsm",
                 "-o", u}) == 0);
    const auto x = unmix::read_matrix(fs::path(u) / "X.hsm");
    CHECK((x - unmix::Matrix::Identity(3, 3)).norm() / 3.0 <= 1e-3);
}

TEST_CASE("sampled candidates and explicit omega files")
{
    TempDir dir("cli");
    const auto s = (dir.path() / "s").string();
    REQUIRE(cli({"synth", "--endmembers", "2", "--pixels", "30", "--bands", "40", "--snr", "40", "--seed", "4", "-o",
                 s}) == 0);
    const auto u = (dir.path() / "u").string();
    REQUIRE(cli({"unmix", "--algo", "glup", "--scene", s + "/scene.hsm", "--sample", "10", "--seed", "3",
                 "--allow-nonconverged", "-o", u}) == 0);
    const auto omega = unmix::read_matrix(fs::path(u) / "omega.csv");
    CHECK(omega.size() == 10);
    CHECK(unmix::read_matrix(fs::path(u) / "X.hsm").rows() == 10);

    const auto v = (dir.path() / "v").string();
    REQUIRE(cli({"unmix", "--algo", "glup", "--scene", s + "/scene.hsm", "--omega", u + "/omega.csv",
                 "--allow-nonconverged", "-o", v}) == 0);
    CHECK(slurp(fs::path(u) / "X.hsm") == slurp(fs::path(v) / "X.hsm"));
}

TEST_CASE("non-converged solves exit with code 3 unless allowed")
{
    TempDir dir("cli");
    const auto s = (dir.path() / "s").string();
    REQUIRE(cli({"synth", "--endmembers", "2", "--pixels", "20", "--bands", "30", "--snr", "30", "--seed", "5", "-o",
                 s}) == 0);
    const auto u = (dir.path() / "u").string();
    CHECK(cli({"unmix", "--algo", "glup", "--max-iter", "3", "--scene", s + "/scene.hsm", "-o", u}) ==
          unmix::cli::kNotConverged);
    CHECK(manifest(u)["solver"]["converged"] == false);
    CHECK(cli({"unmix", "--algo", "glup", "--max-iter", "3", "--allow-nonconverged", "--scene", s + "/scene.hsm",
               "-o", u}) == 0);
}

TEST_CASE("bench-detect writes the probability table")
{
    TempDir dir("cli");
    const auto b = (dir.path() / "b").string();
    REQUIRE(cli({"bench-detect", "--endmembers", "2", "--pixels", "20", "--bands", "40", "--snr", "30", "--trials",
                 "2", "--seed", "1", "--allow-nonconverged", "-o", b}) == 0);
    const std::string table = slurp(fs::path(b) / "table.csv");
    CHECK(table.rfind("snr_db,m_hat,probability,trials\n", 0) == 0);
    CHECK(fs::exists(fs::path(b) / "trials.csv"));
}
