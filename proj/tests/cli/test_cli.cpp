#include "cli.hpp"

#include "nvcav/csv.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using nvcav::cli::run;

namespace
{

fs::path scratch(const std::string &name)
{
    const char *base = std::getenv("NVCAV_TEST_TMP");
    fs::path p = (base ? fs::path(base) : fs::temp_directory_path() / "nvcav_cli") / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Result
{
    int code;
    std::string out, err;
};

Result call(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json load_json(const fs::path &p)
{
    return nlohmann::json::parse(nvcav::read_text_file(p));
}

} // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(call({}).code == 2);
    CHECK(call({"simulate", "nope"}).code == 2);
    CHECK(call({"reproduce", "fig9"}).code == 2);
    CHECK(call({"simulate", "g2", "--format", "xml"}).code == 2);
    CHECK(call({"fit", "lifetime"}).code == 2);
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"--version"}).out.find("nvcav") != std::string::npos);
}

TEST_CASE("simulate g2 reports antibunching and the bunching peak")
{
    const auto dir = scratch("g2");
    const auto r = call({"simulate", "g2", "--rates", "101.2,2.5,32.0,3.8", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = load_json(dir / "g2.json");
    CHECK(j["results"]["g2_zero"].get<double>() == doctest::Approx(0.0).scale(1.0));
    CHECK(j["results"]["bunching_peak"].get<double>() == doctest::Approx(1.203).epsilon(1e-3));
    CHECK(j["version"].get<std::string>() == NVCAV_VERSION);
    CHECK(j["config_sha256"].get<std::string>().size() == 64);
    const auto csv = nvcav::read_csv(dir / "g2.csv");
    bool has_digest = false;
    for (const auto &c : csv.comments)
        has_digest = has_digest || c.find(j["config_sha256"].get<std::string>()) != std::string::npos;
    CHECK(has_digest);
    CHECK(csv.column("g2").front() == 0.0);
}

TEST_CASE("json format embeds the data")
{
    const auto dir = scratch("g2json");
    REQUIRE(call({"simulate", "saturation", "--format", "json", "--out", dir.string()}).code == 0);
    CHECK_FALSE(fs::exists(dir / "saturation.csv"));
    const auto j = load_json(dir / "saturation.json");
    CHECK(j["data"]["power_nw"].size() > 10);
    CHECK(j["results"]["p_sat_nw"].get<double>() == doctest::Approx(1192.6).epsilon(1e-3));
}

TEST_CASE("tags with a fixed seed are byte-identical")
{
    const auto a = scratch("tags_a"), b = scratch("tags_b"), c = scratch("tags_c");
    const auto cfg = scratch("tags_cfg") / "tags.conf";
    nvcav::write_text_file(cfg, "duration_ms = 2\n");
    REQUIRE(call({"simulate", "tags", "--seed", "7", "--config", cfg.string(), "--out", a.string()}).code == 0);
    REQUIRE(call({"simulate", "tags", "--seed", "7", "--config", cfg.string(), "--out", b.string()}).code == 0);
    REQUIRE(call({"simulate", "tags", "--seed", "8", "--config", cfg.string(), "--out", c.string()}).code == 0);
    for (const char *f : {"tags.bin", "tags.csv", "tags.json"})
        CHECK(nvcav::read_text_file(a / f) == nvcav::read_text_file(b / f));
    CHECK(nvcav::read_text_file(a / "tags.bin") != nvcav::read_text_file(c / "tags.bin"));
}

TEST_CASE("environment variable sets the default output directory")
{
    const auto dir = scratch("env");
    ::setenv(nvcav::cli::output_env, dir.string().c_str(), 1);
    const auto r = call({"simulate", "saturation"});
    ::unsetenv(nvcav::cli::output_env);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "saturation.csv"));
}

TEST_CASE("decay sweep shows dips at both modes")
{
    const auto dir = scratch("sweep");
    const auto cfg = dir / "sweep.conf";
    nvcav::write_text_file(cfg, "start_pm = -300\nstop_pm = 100\nstep_pm = 10\n");
    REQUIRE(call({"simulate", "decay-sweep", "--config", cfg.string(), "--out", dir.string()}).code == 0);
    const auto j = load_json(dir / "decay-sweep.json");
    std::vector<double> dips;
    for (const auto &d : j["results"]["dips"])
        dips.push_back(d["delta_cav_pm"].get<double>());
    REQUIRE(dips.size() == 2);
    CHECK(dips[0] == doctest::Approx(-210.0).epsilon(0.03));
    CHECK(std::abs(dips[1]) <= 10.0);
}

TEST_CASE("remaining simulate models run")
{
    const auto dir = scratch("others");
    const auto cfg = dir / "small.conf";
    nvcav::write_text_file(cfg, "step_pm = 20\nt_max_ns = 20\nnoise_nodes = 16\nsamples = 5\n");
    for (const char *m : {"rf-linewidth", "rf-cavity", "rabi", "pulse-train"})
    {
        CAPTURE(m);
        const auto r = call({"simulate", m, "--config", cfg.string(), "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(fs::exists(dir / (std::string(m) + ".json")));
    }
}

TEST_CASE("fit rf-linewidth on a synthetic doublet")
{
    const auto dir = scratch("fit_rf");
    REQUIRE(call({"simulate", "rf-linewidth", "--seed", "3", "--out", dir.string()}).code == 0);
    const auto r = call({"fit", "rf-linewidth", "--data", (dir / "rf-linewidth.csv").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = load_json(dir / "fit-rf-linewidth.json");
    const double g = j["results"]["estimates"]["gamma_ext_mhz"].get<double>();
    const double ci = j["results"]["ci95"]["gamma_ext_mhz"].get<double>();
    CHECK(std::abs(g - 159.0) <= ci);
    CHECK(j["results"]["data_sha256"].get<std::string>().size() == 64);
}

TEST_CASE("fit lifetime on a synthetic 6.88 ns trace")
{
    const auto dir = scratch("fit_tau");
    std::vector<double> t, y;
    for (double x = -3.0; x <= 80.0; x += 0.05)
    {
        t.push_back(x);
        y.push_back(x < 0 ? 0.0 : 1e4 * std::exp(-x / 6.88));
    }
    auto table = nvcav::make_table({"t_ns", "counts"}, {t, y}, {"units: t_ns=ns, counts=counts"});
    nvcav::write_text_file(dir / "trace.csv", nvcav::format_csv(table));
    REQUIRE(call({"fit", "lifetime", "--data", (dir / "trace.csv").string(), "--out", dir.string()}).code == 0);
    const auto j = load_json(dir / "fit-lifetime.json");
    CHECK(j["results"]["estimates"]["tau_ns"].get<double>() == doctest::Approx(6.88).epsilon(0.01));
}

TEST_CASE("fit input errors")
{
    const auto dir = scratch("fit_bad");
    nvcav::write_text_file(dir / "empty.csv", "# units: t_ns=ns\nt_ns,counts\n");
    auto r = call({"fit", "lifetime", "--data", (dir / "empty.csv").string(), "--out", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("line") != std::string::npos);
    nvcav::write_text_file(dir / "ragged.csv", "# units: t_ns=ns\nt_ns,counts\n1,2\n3\n");
    r = call({"fit", "lifetime", "--data", (dir / "ragged.csv").string(), "--out", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("line 4") != std::string::npos);
    nvcav::write_text_file(dir / "nounits.csv", "t_ns,counts\n1,2\n");
    CHECK(call({"fit", "lifetime", "--data", (dir / "nounits.csv").string(), "--out", dir.string()}).code == 3);
    CHECK(call({"fit", "lifetime", "--data", (dir / "missing.csv").string(), "--out", dir.string()}).code == 3);
}

TEST_CASE("reproduce writes a report and signals breaches")
{
    const auto dir = scratch("repro");
    const auto ok = call({"reproduce", "fig4b", "--out", dir.string()});
    CHECK(ok.code == 0);
    CHECK(load_json(dir / "reproduce-fig4b.json")["pass"].get<bool>());
    const auto fig3c = call({"reproduce", "fig3c", "--out", dir.string()});
    CHECK(fig3c.code == 0);
    CHECK(fig3c.out.find("contrast") != std::string::npos);
    const auto fig2 = call({"reproduce", "fig2", "--out", dir.string()});
    CHECK(fig2.out.find("lifetime_m2") != std::string::npos);
    CHECK((fig2.code == 0 || fig2.code == 1));
    if (fig2.code != 0)
        CHECK(fig2.out.find("tolerance breach") != std::string::npos);
}
