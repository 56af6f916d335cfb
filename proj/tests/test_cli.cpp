#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace ahelab::cli;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ahelab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    Run r;
    r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ahelab_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("list syntax") {
    CHECK(parse_int_list("q", "0..4") == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(parse_real_list("c", "0..1:0.25") == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(parse_real_list("c", "1, 2,5") == std::vector<double>{1.0, 2.0, 5.0});
    CHECK(parse_real_list("c", "").empty());
    CHECK_THROWS_AS((void)parse_int_list("n", "1.5"), ConfigError);
    CHECK_THROWS_AS((void)parse_real_list("c", "0..1:0"), ConfigError);
    CHECK_THROWS_AS((void)parse_real_list("c", "x"), ConfigError);
}

TEST_CASE("csv quoting and number formatting") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(format_cell(Cell{0.1}) == "0.10000000000000001");
    CHECK(format_cell(Cell{3LL}) == "3");
    CHECK(format_cell(Cell{true}) == "true");
    Table t{"t", {"x", "label"}, {{Cell{1.5}, Cell{std::string("a,b")}}}};
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str() == "x,label\r\n1.5,\"a,b\"\r\n");
    std::ostringstream js;
    write_json(js, t);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j["columns"][1] == "label");
    CHECK(j["rows"][0]["x"] == 1.5);
    CHECK(j["table"] == "t");
}

TEST_CASE("config files") {
    const auto dir = scratch("cfg");
    {
        std::ofstream f(dir / "a.cfg");
        f << "# comment\nfamily = hodge\nn = 3  # trailing\nq = 0..4\n";
    }
    const auto cfg = read_config_file((dir / "a.cfg").string());
    CHECK(cfg.at("family") == "hodge");
    CHECK(cfg.at("n") == "3");
    {
        std::ofstream f(dir / "dup.cfg");
        f << "n = 3\nn = 4\n";
    }
    CHECK_THROWS_AS((void)read_config_file((dir / "dup.cfg").string()), ConfigError);
    CHECK_THROWS_AS((void)read_config_file((dir / "missing.cfg").string()), ConfigError);

    const auto r = invoke({"indicial", "--config", (dir / "a.cfg").string(), "--q", "2", "--output-dir",
                           (dir / "out").string(), "--quiet"});
    CHECK(r.code == kExitOk);
    const std::string csv = slurp(dir / "out" / "indicial.csv");
    CHECK(csv.find("not-fredholm-despite-radius") != std::string::npos);
    CHECK(csv.find("0.5") != std::string::npos);
    {
        std::ofstream f(dir / "bad.cfg");
        f << "family = hodge\nbogus = 1\n";
    }
    CHECK(invoke({"indicial", "--config", (dir / "bad.cfg").string(), "--output-dir", (dir / "o2").string()}).code ==
          kExitConfig);
}

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    const auto od = (dir / "o").string();
    CHECK(invoke({"indicial", "--family", "nonsense", "--output-dir", od}).code == kExitConfig);
    CHECK(invoke({"indicial", "--family", "hodge", "--c", "1", "--output-dir", od}).code == kExitConfig);
    CHECK(invoke({"indicial", "--no-such-flag"}).code == kExitConfig);
    CHECK(invoke({"--help"}).code == kExitOk);
    const auto ok = invoke({"indicial", "--family", "lichnerowicz", "--n", "4", "--c", "8", "--output-dir", od});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("lichnerowicz") != std::string::npos);
    const auto fail =
        invoke({"green", "--n", "3", "--c", "0", "--check-slope", "2.0", "--tol", "0.06", "--output-dir", od, "--quiet"});
    CHECK(fail.code == kExitCheck);
    CHECK(fail.out.empty());
    const auto num = invoke({"einstein", "solve", "--boundary", "berger:1.05", "--M", "48", "--max-iters", "1",
                             "--output-dir", od, "--quiet"});
    CHECK(num.code == kExitNumeric);
    CHECK(fs::exists(dir / "o" / "manifest.json"));
}

TEST_CASE("empty grid gives an empty table") {
    const auto dir = scratch("empty");
    const auto r = invoke({"indicial", "--family", "scalar", "--n", "", "--output-dir", dir.string()});
    CHECK(r.code == kExitOk);
    const std::string csv = slurp(dir / "indicial.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
}

TEST_CASE("manifest rerun is byte identical") {
    const auto dir = scratch("rerun");
    const auto a = (dir / "a").string(), b = (dir / "b").string();
    REQUIRE(invoke({"spectrum", "--n", "3", "--D", "20", "--N", "256", "--estimate", "cheng-yau", "--samples", "12",
                    "--seed", "5", "--output-dir", a, "--quiet"})
                .code == kExitOk);
    const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest["schema_version"] == kSchemaVersion);
    CHECK(manifest["exit_code"] == 0);
    REQUIRE(invoke({"spectrum", "--config", (dir / "a" / "manifest.json").string(), "--output-dir", b, "--quiet"})
                .code == kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        if (e.path().extension() != ".csv") continue;
        CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
    }
}

TEST_CASE("json output") {
    const auto dir = scratch("json");
    REQUIRE(invoke({"norms", "--s", "1", "--delta", "0.5", "--format", "json", "--output-dir", dir.string(), "--quiet"})
                .code == kExitOk);
    bool any = false;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() != ".json" || e.path().filename() == "manifest.json") continue;
        const auto j = nlohmann::json::parse(slurp(e.path()));
        CHECK(j.contains("columns"));
        any = true;
    }
    CHECK(any);
}
