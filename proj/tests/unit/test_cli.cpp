#include "commands.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace eden;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "eden");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const char* kTinyScenario = "seed = 5\nn_envoys = 20\nK = 10000\ntau = 100\ntheta = 0.3\nh = 0.8\nalpha = 0.9\n"
                            "n_messages = 3\npayload_size = 24\nlatency = \"uniform:1,3\"\nmessage_deadline = 20\n";

} // namespace

TEST_CASE("params")
{
    auto r = invoke({"params", "--h", "0.75", "--alpha", "1"});
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["tau_min"] == 1134);
    CHECK(j.contains("theta_interval"));

    r = invoke({"params", "--h", "0.75", "--alpha", "0.54", "--tau", "5000", "--theta", "0.3"});
    CHECK(r.code == 0);
    j = json::parse(r.out);
    CHECK(j["verdict"] == "feasible");
    CHECK(j["feasibility"]["feasible"] == true);
    CHECK(j.contains("tail"));

    r = invoke({"params", "--h", "0.75", "--alpha", "0.3", "--tau", "5000", "--theta", "0.3"});
    CHECK(r.code == cli::kExitFail);
    CHECK(json::parse(r.out)["verdict"] == "infeasible");

    CHECK(invoke({"params", "--h", "0.6", "--alpha", "1"}).code == cli::kExitUsage);
    CHECK(invoke({"params", "--h", "0.75", "--alpha", "0"}).code == cli::kExitUsage);
    CHECK(invoke({"params", "--h", "0.75", "--alpha", "1", "--bogus", "1"}).code == cli::kExitUsage);
    CHECK(invoke({"params", "--alpha", "1"}).code == cli::kExitUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kExitUsage);

    r = invoke({"params", "--h", "0.75", "--alpha", "1", "--format", "table"});
    CHECK(r.code == 0);
    CHECK(r.out.find("1134") != std::string::npos);
}

TEST_CASE("simulate writes identical reports for the same config")
{
    testing::TempDir dir("cli");
    std::ofstream(dir.file("tiny.conf")) << kTinyScenario;

    auto a = invoke({"simulate", dir.file("tiny.conf"), "--out", dir.file("a.json"), "--events", dir.file("a.jsonl"),
                     "--csv", dir.file("a.csv"), "--threads", "1"});
    auto b = invoke({"simulate", "--config", dir.file("tiny.conf"), "--out", dir.file("b.json"), "--threads", "3"});
    INFO(a.err);
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    CHECK(a.out.find("forged_commits=0") != std::string::npos);
    CHECK(slurp(dir.path() / "a.json") == slurp(dir.path() / "b.json"));
    const auto report = json::parse(slurp(dir.path() / "a.json"));
    CHECK(report["aggregates"]["forged_commits"] == 0);

    std::istringstream events(slurp(dir.path() / "a.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(events, line)) {
        CHECK(json::parse(line)["status"] == "committed");
        ++lines;
    }
    CHECK(lines == 3);

    // Report on standard output, summary on the error stream.
    auto c = invoke({"simulate", dir.file("tiny.conf"), "--seed", "6", "--strategy", "forge"});
    CHECK(c.code == 0);
    CHECK(json::parse(c.out)["aggregates"]["forged_commits"] == 0);
    CHECK(c.err.find("strategy=forge") != std::string::npos);
}

TEST_CASE("simulate configuration errors")
{
    testing::TempDir dir("cli");
    std::ofstream(dir.file("bad.conf")) << kTinyScenario << "colour = blue\n";
    auto r = invoke({"simulate", dir.file("bad.conf")});
    CHECK(r.code == cli::kExitConfig);
    CHECK(r.err.find("colour") != std::string::npos);

    std::ofstream(dir.file("whale.conf")) << "n_envoys = 2\nK = 10\ntau = 5\nh = 0.8\nalpha = 1\n"
                                             "stake_distribution = \"explicit:5,5\"\n";
    CHECK(invoke({"simulate", dir.file("whale.conf")}).code == cli::kExitConfig);
    CHECK(invoke({"simulate", dir.file("missing.conf")}).code == cli::kExitConfig);
    CHECK(invoke({"simulate", dir.file("bad.conf"), "--strategy", "bribe"}).code != 0);
    CHECK(invoke({"simulate"}).code == cli::kExitUsage);
}

TEST_CASE("codec-check")
{
    auto r = invoke({"codec-check", "--trials", "200"});
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["vote_threshold"] == 30);
    CHECK(j["source_k"] == 26);
    CHECK(j["rows"].size() == 4);

    r = invoke({"codec-check", "--trials", "1", "--symbols", "100"});
    j = json::parse(r.out);
    CHECK(j["rows"].back()["symbols"] == 100);
    CHECK(j["rows"].back()["rate"] == 1.0);

    CHECK(invoke({"codec-check", "--k", "31"}).code == cli::kExitConfig);
    CHECK(invoke({"codec-check", "--trials", "0"}).code == cli::kExitUsage);
}

TEST_CASE("sortition-bench")
{
    auto r = invoke({"sortition-bench", "--stake", "1", "--draws", "2000", "--seed", "3"});
    CHECK(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["summary"]["zero_fraction"].get<double>() > 0.99);
    CHECK(j["summary"]["mean"].get<double>() < 0.01);

    auto again = json::parse(invoke({"sortition-bench", "--stake", "1", "--draws", "2000", "--seed", "3"}).out);
    CHECK(again["summary"] == j["summary"]);

    r = invoke({"sortition-bench", "--stake", "1000000", "--draws", "2000"});
    j = json::parse(r.out);
    CHECK(std::abs(j["summary"]["z_score"].get<double>()) < 4);
    CHECK(j["timing"]["draws_per_second"].get<double>() > 0);
}

TEST_CASE("keygen")
{
    const std::string seed(64, '1');
    auto a = invoke({"keygen", "--seed", seed});
    auto b = invoke({"keygen", "--seed", seed});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    const auto j = json::parse(a.out);
    CHECK(j["public_key"].get<std::string>().size() == 66);
    CHECK(j["seed"] == seed);

    CHECK(invoke({"keygen"}).out != invoke({"keygen"}).out);
    CHECK(invoke({"keygen", "--seed", "abcd"}).code == cli::kExitUsage);
}
