#include "commands.hpp"

#include "eden/error.hpp"
#include "eden/fountain.hpp"
#include "eden/params.hpp"
#include "eden/simnet.hpp"
#include "eden/sortition.hpp"
#include "eden/vrf.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

namespace eden::cli {

namespace {

using nlohmann::json;

/// Flattened key/value rows for --format table.
void print_table(const json& j, std::ostream& out, const std::string& prefix = {})
{
    for (const auto& [key, value] : j.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            print_table(value, out, name);
        } else if (value.is_array() && !value.empty() && value.front().is_object()) {
            for (std::size_t i = 0; i < value.size(); ++i)
                print_table(value[i], out, name + "[" + std::to_string(i) + "]");
        } else {
            out << std::left << std::setw(40) << name << ' ' << (value.is_string() ? value.get<std::string>() : value.dump())
                << '\n';
        }
    }
}

void emit(const json& j, Format format, std::ostream& out)
{
    if (format == Format::table)
        print_table(j, out);
    else
        out << j.dump(2) << '\n';
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write '" + path + "'");
    f << content;
    if (!f)
        throw Error("write to '" + path + "' failed");
}

sortition::UnitRandom random_unit(std::mt19937_64& rng)
{
    Digest d{};
    for (std::size_t i = 0; i < d.size(); i += 8) {
        const auto w = rng();
        for (std::size_t b = 0; b < 8; ++b)
            d[i + b] = static_cast<std::uint8_t>(w >> (56 - 8 * b));
    }
    return sortition::UnitRandom::from_bytes(d);
}

} // namespace

int cmd_params(const ParamsOptions& opts, std::ostream& out)
{
    const auto tau_min = params::tau_min(opts.h, opts.alpha);
    if (opts.theta && !opts.tau)
        throw DomainError("--theta requires --tau");

    params::SecurityModel model{opts.h, opts.alpha, opts.tau.value_or(tau_min), opts.theta.value_or(0.5),
                                opts.total_supply};
    json j;
    j["h"] = opts.h;
    j["alpha"] = opts.alpha;
    j["tau_min"] = tau_min;
    if (!opts.theta) {
        model.validate();
        const double lo = params::theta_min_adversary(model);
        const double hi = params::theta_max_honest(model);
        j["theta_interval"] = {{"tau", model.tau},
                               {"theta_min_adversary", lo},
                               {"theta_max_honest", hi},
                               {"nonempty", lo < hi}};
        emit(j, opts.format, out);
        return lo < hi ? kExitOk : kExitFail;
    }

    const auto f = params::feasibility(model);
    j["model"] = model;
    j["tail"] = params::tail_report(model);
    j["theta_max_honest_full"] = params::theta_max_honest_full(model);
    j["feasibility"] = f;
    j["verdict"] = f.feasible ? "feasible" : "infeasible";
    emit(j, opts.format, out);
    return f.feasible ? kExitOk : kExitFail;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err)
{
    auto config = simnet::ScenarioConfig::load(opts.config_path);
    if (opts.seed)
        config.seed = *opts.seed;
    if (opts.strategy)
        config.adversary_strategy = simnet::parse_strategy(*opts.strategy);
    if (opts.threads)
        config.threads = *opts.threads;

    const auto universe = simnet::build_universe(config);
    const auto report = simnet::run(config, universe);
    const std::string body = report.to_json(config, universe).dump(2) + "\n";

    std::ostream* summary = &out;
    if (opts.out_path.empty()) {
        out << body;
        summary = &err;
    } else {
        write_file(opts.out_path, body);
    }
    if (!opts.csv_path.empty())
        write_file(opts.csv_path, report.to_csv());
    if (!opts.events_path.empty()) {
        std::string lines;
        for (const auto& e : report.events)
            lines += e + "\n";
        write_file(opts.events_path, lines);
    }

    const bool ok = report.forged_commits == 0 && report.honest_commit_rate >= config.expect_commit_rate;
    std::ostringstream line;
    line << std::fixed << std::setprecision(4) << "commit_rate=" << report.honest_commit_rate
         << " forged_commits=" << report.forged_commits << " mean_commit_latency=";
    if (report.mean_commit_latency)
        line << *report.mean_commit_latency;
    else
        line << "n/a";
    line << " messages=" << report.messages.size() << " strategy=" << simnet::to_string(config.adversary_strategy)
         << " seed=" << config.seed << (ok ? " PASS" : " FAIL");
    *summary << line.str() << '\n';
    return ok ? kExitOk : kExitFail;
}

int cmd_codec_check(const CodecCheckOptions& opts, std::ostream& out)
{
    if (opts.trials == 0)
        throw DomainError("--trials must be at least 1");
    // K only matters for sortition; any value above tau gives the same threshold.
    const sortition::SortitionParams sp(opts.tau, sortition::Ratio::parse(opts.theta), opts.tau + 1);
    const auto kind = fountain::parse_codec_kind(opts.codec);

    auto codec = fountain::CodecConfig::for_params(sp, 1, opts.epsilon, kind);
    if (opts.k)
        codec.source_k = *opts.k;
    codec.validate(sp.vote_threshold());
    const std::size_t message_size = opts.message_size ? opts.message_size : codec.source_k;
    codec.symbol_size = static_cast<std::uint32_t>((message_size + codec.source_k - 1) / codec.source_k);

    const auto threshold = sp.vote_threshold();
    std::vector<std::pair<double, std::uint64_t>> rows;
    for (double f : {0.8, 0.9, 1.0, 1.1})
        rows.emplace_back(f, std::min<std::uint64_t>(opts.tau, static_cast<std::uint64_t>(std::llround(f * threshold))));
    for (auto c : opts.extra_counts) {
        if (c > opts.tau)
            throw DomainError("--symbols exceeds tau");
        rows.emplace_back(static_cast<double>(c) / static_cast<double>(threshold), c);
    }

    json table = json::array();
    double rate_at_threshold = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto [fraction, count] = rows[r];
        std::seed_seq seq{opts.seed, static_cast<std::uint64_t>(r)};
        std::mt19937_64 rng(seq);
        std::uint64_t ok = 0;
        Bytes message(message_size);
        for (std::uint64_t t = 0; t < opts.trials; ++t) {
            for (auto& b : message)
                b = static_cast<std::uint8_t>(rng());
            const auto ids = fountain::select_symbols(random_unit(rng), count, codec.tau);
            const auto symbols = fountain::encode_subset(message, codec, ids);
            const auto decoded = fountain::decode(symbols, codec, message.size());
            ok += decoded && *decoded == message;
        }
        const double rate = static_cast<double>(ok) / static_cast<double>(opts.trials);
        if (r == 2)
            rate_at_threshold = rate;
        table.push_back({{"fraction", fraction}, {"symbols", count}, {"successes", ok}, {"rate", rate}});
    }

    const bool pass = rate_at_threshold >= 0.99;
    json j{{"tau", opts.tau},
           {"theta", sp.theta().to_string()},
           {"vote_threshold", threshold},
           {"source_k", codec.source_k},
           {"overhead_epsilon", codec.overhead_epsilon},
           {"symbol_size", codec.symbol_size},
           {"message_size", message_size},
           {"codec", fountain::to_string(codec.kind)},
           {"trials", opts.trials},
           {"seed", opts.seed},
           {"rows", table},
           {"pass", pass}};
    emit(j, opts.format, out);
    return pass ? kExitOk : kExitFail;
}

int cmd_sortition_bench(const SortitionBenchOptions& opts, std::ostream& out)
{
    if (opts.draws == 0)
        throw DomainError("--draws must be at least 1");
    if (opts.stake == 0 || opts.stake > opts.total_supply)
        throw DomainError("--stake must lie in [1, K]");
    const sortition::SortitionParams sp(opts.tau, sortition::Ratio::parse(opts.theta), opts.total_supply);

    std::mt19937_64 rng(opts.seed);
    double sum = 0, sum_sq = 0;
    std::uint64_t zeros = 0, max = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t i = 0; i < opts.draws; ++i) {
        const auto v = sortition::compute_votes(random_unit(rng), opts.stake, sp).votes;
        sum += static_cast<double>(v);
        sum_sq += static_cast<double>(v) * static_cast<double>(v);
        zeros += v == 0;
        max = std::max(max, v);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const double n = static_cast<double>(opts.draws);
    const double mean = sum / n;
    const double variance = opts.draws > 1 ? (sum_sq - n * mean * mean) / (n - 1) : 0.0;
    const double p = sp.probability_approx();
    const double expected = static_cast<double>(opts.stake) * p;
    const double expected_var = expected * (1 - p);
    const double std_error = std::sqrt(expected_var / n);

    json summary{{"stake", opts.stake},
                 {"tau", opts.tau},
                 {"K", opts.total_supply},
                 {"p", p},
                 {"draws", opts.draws},
                 {"seed", opts.seed},
                 {"mean", mean},
                 {"variance", variance},
                 {"expected_mean", expected},
                 {"expected_variance", expected_var},
                 {"std_error", std_error},
                 {"z_score", std_error > 0 ? (mean - expected) / std_error : 0.0},
                 {"zero_fraction", static_cast<double>(zeros) / n},
                 {"max", max}};
    json j{{"summary", summary},
           {"timing", {{"seconds", seconds}, {"draws_per_second", seconds > 0 ? n / seconds : 0.0}}}};
    emit(j, opts.format, out);
    return kExitOk;
}

int cmd_keygen(const KeygenOptions& opts, std::ostream& out)
{
    vrf::Seed seed{};
    if (opts.seed_hex) {
        const auto bytes = from_hex(*opts.seed_hex);
        if (bytes.size() != seed.size())
            throw DomainError("--seed must be 32 bytes of hex");
        std::copy(bytes.begin(), bytes.end(), seed.begin());
    } else {
        seed = vrf::random_seed();
    }
    const auto keys = vrf::keygen(seed);
    json j{{"seed", to_hex(seed)}, {"secret_key", to_hex(keys.secret_key)}, {"public_key", to_hex(keys.public_key)}};
    out << j.dump(2) << '\n';
    return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Eden cross-chain message verification toolkit", "eden"};
    app.set_help_flag("--help", "print this help and exit");  // -h would collide with --h
    app.require_subcommand(1);
    const std::map<std::string, Format> formats{{"json", Format::json}, {"table", Format::table}};
    std::string out_path;

    ParamsOptions po;
    auto* params = app.add_subcommand("params", "security thresholds and feasibility of (h, alpha, tau, theta)");
    params->add_option("--h", po.h, "honest share of staked tokens, in (2/3, 1]")->required();
    params->add_option("--alpha", po.alpha, "online share of the supply, in (0, 1]")->required();
    params->add_option("--tau", po.tau, "expected selected tokens per message");
    params->add_option("--theta", po.theta, "vote threshold as a fraction of tau");
    params->add_option("--K", po.total_supply, "total supply, for the (1 - p) variance factor");
    params->add_option("--format", po.format)->transform(CLI::CheckedTransformer(formats));
    params->add_option("--out", out_path, "write output here instead of standard output");

    SimulateOptions so;
    auto* simulate = app.add_subcommand("simulate", "run a scenario and write its report");
    simulate->add_option("--config,config", so.config_path, "key = value scenario file")->required();
    simulate->add_option("--seed", so.seed, "override the config seed");
    simulate->add_option("--strategy", so.strategy, "override adversary_strategy");
    simulate->add_option("--threads", so.threads, "worker threads (results do not depend on it)");
    simulate->add_option("--out", so.out_path, "report JSON path (default: standard output)");
    simulate->add_option("--csv", so.csv_path, "per-message CSV path");
    simulate->add_option("--events", so.events_path, "JSON-lines event log path");

    CodecCheckOptions co;
    auto* codec = app.add_subcommand("codec-check", "decode success at fractions of ceil(theta*tau) symbols");
    codec->add_option("--tau", co.tau);
    codec->add_option("--theta", co.theta);
    codec->add_option("--k", co.k, "source symbols (default floor(ceil(theta*tau)/(1+epsilon)))");
    codec->add_option("--epsilon", co.epsilon);
    codec->add_option("--trials", co.trials);
    codec->add_option("--seed", co.seed);
    codec->add_option("--message-size", co.message_size);
    codec->add_option("--codec", co.codec, "gf256 or lt");
    codec->add_option("--symbols", co.extra_counts, "additional symbol counts to test");
    codec->add_option("--format", co.format)->transform(CLI::CheckedTransformer(formats));
    codec->add_option("--out", out_path);

    SortitionBenchOptions bo;
    auto* bench = app.add_subcommand("sortition-bench", "draw vote weights and summarize them");
    bench->add_option("--stake", bo.stake);
    bench->add_option("--tau", bo.tau);
    bench->add_option("--K", bo.total_supply);
    bench->add_option("--theta", bo.theta);
    bench->add_option("--draws", bo.draws);
    bench->add_option("--seed", bo.seed);
    bench->add_option("--format", bo.format)->transform(CLI::CheckedTransformer(formats));
    bench->add_option("--out", out_path);

    KeygenOptions ko;
    auto* keygen = app.add_subcommand("keygen", "generate a VRF key pair");
    keygen->add_option("--seed", ko.seed_hex, "32-byte hex seed (default: system entropy)");
    keygen->add_option("--out", out_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        std::ofstream file;
        std::ostream* target = &out;
        if (!out_path.empty()) {
            file.open(out_path, std::ios::binary);
            if (!file)
                throw Error("cannot write '" + out_path + "'");
            target = &file;
        }
        if (params->parsed())
            return cmd_params(po, *target);
        if (simulate->parsed())
            return cmd_simulate(so, out, err);
        if (codec->parsed())
            return cmd_codec_check(co, *target);
        if (bench->parsed())
            return cmd_sortition_bench(bo, *target);
        return cmd_keygen(ko, *target);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFail;
    }
}

} // namespace eden::cli
