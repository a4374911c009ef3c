#include "eden/simnet.hpp"
#include "eden/error.hpp"

#include <boost/program_options.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace eden::simnet {

namespace {

namespace po = boost::program_options;

constexpr const char* kKeys[] = {
    "seed", "n_envoys", "stake_distribution", "K", "h", "alpha", "tau", "theta", "source_k",
    "overhead_epsilon", "symbol_size", "codec", "n_messages", "payload_size", "adversary_strategy",
    "latency", "message_deadline", "message_interval", "expect_commit_rate", "threads", "message_feed",
};

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view s)
{
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return std::string(s);
}

double parse_real(std::string_view text, const char* key)
{
    text = trim(text);
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError("expected a number, got '" + std::string(text) + "'", key);
    return v;
}

/// Accepts plain integers and integral scientific notation such as 1e9.
std::uint64_t parse_u64(std::string_view text, const char* key)
{
    text = trim(text);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size())
        return v;
    const double d = parse_real(text, key);
    if (d < 0 || d != std::floor(d) || d >= 18446744073709551616.0)
        throw ConfigError("expected a non-negative integer, got '" + std::string(text) + "'", key);
    return static_cast<std::uint64_t>(d);
}

std::uint32_t parse_u32(std::string_view text, const char* key)
{
    const auto v = parse_u64(text, key);
    if (v > UINT32_MAX)
        throw ConfigError("exceeds 32 bits", key);
    return static_cast<std::uint32_t>(v);
}

template <typename F>
auto rekey(const char* key, F&& f)
{
    try {
        return f();
    } catch (const ConfigError& e) {
        if (!e.key().empty())
            throw;
        throw ConfigError(e.what(), key);
    } catch (const Error& e) {
        throw ConfigError(e.what(), key);
    }
}

std::string format_real(double v)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

void validate(const ScenarioConfig& c)
{
    if (c.n_envoys == 0)
        throw ConfigError("must be at least 1", "n_envoys");
    if (c.K == 0)
        throw ConfigError("must be positive", "K");
    if (!(c.h >= 0.0 && c.h <= 1.0))
        throw ConfigError("must lie in [0, 1]", "h");
    if (!(c.alpha > 0.0 && c.alpha <= 1.0))
        throw ConfigError("must lie in (0, 1]", "alpha");
    if (c.tau == 0 || c.tau > c.K)
        throw ConfigError("must lie in [1, K]", "tau");
    if (c.message_feed.empty() && c.n_messages == 0)
        throw ConfigError("must be at least 1", "n_messages");
    if (c.message_deadline == 0)
        throw ConfigError("must be at least 1 tick", "message_deadline");
    if (c.latency.lo > c.latency.hi)
        throw ConfigError("lower bound exceeds upper bound", "latency");
    if (!(c.expect_commit_rate >= 0.0 && c.expect_commit_rate <= 1.0))
        throw ConfigError("must lie in [0, 1]", "expect_commit_rate");
    if (c.stake_distribution.kind == StakeDistribution::Kind::explicit_list
        && c.stake_distribution.weights.size() != c.n_envoys)
        throw ConfigError("explicit list length must equal n_envoys", "stake_distribution");
}

/// Independent 64-bit stream seeds: SHA-256(domain || seed || a || b).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view domain, std::uint64_t a = 0, std::uint64_t b = 0)
{
    Bytes buf;
    put_be64(buf, seed);
    put_be64(buf, a);
    put_be64(buf, b);
    return get_be64(sha256({as_bytes(domain), buf}));
}

unsigned worker_count(unsigned requested, std::size_t jobs)
{
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(1, jobs)));
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be written by index.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    const unsigned workers = worker_count(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t)
        pool.emplace_back(work);
    work();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

std::vector<std::uint64_t> normalize_stakes(const std::vector<long double>& weights, std::uint64_t total)
{
    const long double sum = std::accumulate(weights.begin(), weights.end(), 0.0L);
    if (!(sum > 0))
        throw ConfigError("weights must be positive", "stake_distribution");
    std::vector<std::uint64_t> stakes(weights.size());
    std::vector<std::pair<long double, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const long double quota = static_cast<long double>(total) * weights[i] / sum;
        stakes[i] = static_cast<std::uint64_t>(std::floor(quota));
        assigned += stakes[i];
        remainders.emplace_back(quota - std::floor(quota), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned)
        ++stakes[remainders[r % remainders.size()].second];
    return stakes;
}

double variance_of(const std::vector<double>& xs, double mean)
{
    if (xs.size() < 2)
        return 0.0;
    double acc = 0;
    for (double x : xs)
        acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size() - 1);
}

CohortStats stats_of(const std::vector<double>& xs)
{
    CohortStats s;
    if (xs.empty())
        return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    s.variance = variance_of(xs, s.mean);
    return s;
}

} // namespace

StakeDistribution StakeDistribution::parse(std::string_view text)
{
    text = trim(text);
    StakeDistribution d;
    if (text == "uniform")
        return d;
    const auto colon = text.find(':');
    const auto head = text.substr(0, colon);
    const auto rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (head == "zipf") {
        d.kind = Kind::zipf;
        d.exponent = rest.empty() ? 1.0 : parse_real(rest, "stake_distribution");
        if (d.exponent < 0)
            throw ConfigError("zipf exponent must be non-negative", "stake_distribution");
        return d;
    }
    if (head == "explicit" && !rest.empty()) {
        d.kind = Kind::explicit_list;
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const auto comma = rest.find(',', pos);
            const auto item = rest.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
            const auto w = parse_u64(item, "stake_distribution");
            if (w == 0)
                throw ConfigError("explicit weights must be positive", "stake_distribution");
            d.weights.push_back(w);
            if (comma == std::string_view::npos)
                break;
            pos = comma + 1;
        }
        return d;
    }
    throw ConfigError("expected uniform, zipf:<exponent> or explicit:<w1,w2,...>", "stake_distribution");
}

std::string StakeDistribution::to_string() const
{
    switch (kind) {
    case Kind::uniform: return "uniform";
    case Kind::zipf: return "zipf:" + format_real(exponent);
    case Kind::explicit_list: {
        std::string out = "explicit:";
        for (std::size_t i = 0; i < weights.size(); ++i)
            out += (i ? "," : "") + std::to_string(weights[i]);
        return out;
    }
    }
    return "?";
}

LatencyModel LatencyModel::parse(std::string_view text)
{
    text = trim(text);
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("expected fixed:<ticks> or uniform:<lo>,<hi>", "latency");
    const auto head = text.substr(0, colon);
    const auto rest = text.substr(colon + 1);
    LatencyModel m;
    if (head == "fixed") {
        m.lo = m.hi = parse_u64(rest, "latency");
        return m;
    }
    if (head == "uniform") {
        const auto comma = rest.find(',');
        if (comma == std::string_view::npos)
            throw ConfigError("uniform latency needs lo,hi", "latency");
        m.kind = Kind::uniform;
        m.lo = parse_u64(rest.substr(0, comma), "latency");
        m.hi = parse_u64(rest.substr(comma + 1), "latency");
        if (m.lo > m.hi)
            throw ConfigError("lower bound exceeds upper bound", "latency");
        return m;
    }
    throw ConfigError("expected fixed:<ticks> or uniform:<lo>,<hi>", "latency");
}

std::string LatencyModel::to_string() const
{
    if (kind == Kind::fixed)
        return "fixed:" + std::to_string(lo);
    return "uniform:" + std::to_string(lo) + "," + std::to_string(hi);
}

std::string_view to_string(AdversaryStrategy s)
{
    switch (s) {
    case AdversaryStrategy::none: return "none";
    case AdversaryStrategy::forge: return "forge";
    case AdversaryStrategy::inflate: return "inflate";
    case AdversaryStrategy::corrupt_symbols: return "corrupt-symbols";
    case AdversaryStrategy::replay: return "replay";
    }
    return "?";
}

AdversaryStrategy parse_strategy(std::string_view text)
{
    text = trim(text);
    for (auto s : {AdversaryStrategy::none, AdversaryStrategy::forge, AdversaryStrategy::inflate,
                   AdversaryStrategy::corrupt_symbols, AdversaryStrategy::replay})
        if (text == to_string(s))
            return s;
    throw ConfigError("expected none, forge, inflate, corrupt-symbols or replay", "adversary_strategy");
}

std::string_view to_string(Role r)
{
    switch (r) {
    case Role::honest: return "honest";
    case Role::adversary: return "adversary";
    case Role::offline: return "offline";
    }
    return "?";
}

ScenarioConfig ScenarioConfig::parse(std::istream& in)
{
    po::options_description desc;
    for (const char* key : kKeys)
        desc.add_options()(key, po::value<std::string>());
    po::variables_map vm;
    auto option_name = [](const po::error_with_option_name& e) {
        std::string name = e.get_option_name();
        return name.substr(name.find_first_not_of('-'));
    };
    try {
        po::store(po::parse_config_file(in, desc, false), vm);
    } catch (const po::unknown_option& e) {
        throw ConfigError("unknown key", option_name(e));
    } catch (const po::multiple_occurrences& e) {
        throw ConfigError("given more than once", option_name(e));
    } catch (const po::error& e) {
        throw ConfigError(e.what());
    }

    ScenarioConfig c;
    auto get = [&](const char* key) -> std::optional<std::string> {
        if (!vm.count(key))
            return std::nullopt;
        return unquote(vm[key].as<std::string>());
    };
    if (auto v = get("seed")) c.seed = parse_u64(*v, "seed");
    if (auto v = get("n_envoys")) c.n_envoys = parse_u32(*v, "n_envoys");
    if (auto v = get("stake_distribution")) c.stake_distribution = rekey("stake_distribution", [&] { return StakeDistribution::parse(*v); });
    if (auto v = get("K")) c.K = parse_u64(*v, "K");
    if (auto v = get("h")) c.h = parse_real(*v, "h");
    if (auto v = get("alpha")) c.alpha = parse_real(*v, "alpha");
    if (auto v = get("tau")) c.tau = parse_u64(*v, "tau");
    if (auto v = get("theta")) c.theta = rekey("theta", [&] { return sortition::Ratio::parse(*v); });
    if (auto v = get("source_k")) c.source_k = parse_u32(*v, "source_k");
    if (auto v = get("overhead_epsilon")) c.overhead_epsilon = parse_real(*v, "overhead_epsilon");
    if (auto v = get("symbol_size")) c.symbol_size = parse_u32(*v, "symbol_size");
    if (auto v = get("codec")) c.codec = rekey("codec", [&] { return fountain::parse_codec_kind(*v); });
    if (auto v = get("n_messages")) c.n_messages = parse_u32(*v, "n_messages");
    if (auto v = get("payload_size")) c.payload_size = parse_u32(*v, "payload_size");
    if (auto v = get("adversary_strategy")) c.adversary_strategy = rekey("adversary_strategy", [&] { return parse_strategy(*v); });
    if (auto v = get("latency")) c.latency = rekey("latency", [&] { return LatencyModel::parse(*v); });
    if (auto v = get("message_deadline")) c.message_deadline = parse_u64(*v, "message_deadline");
    if (auto v = get("message_interval")) c.message_interval = parse_u64(*v, "message_interval");
    if (auto v = get("expect_commit_rate")) c.expect_commit_rate = parse_real(*v, "expect_commit_rate");
    if (auto v = get("threads")) c.threads = parse_u32(*v, "threads");
    if (auto v = get("message_feed")) c.message_feed = *v;
    validate(c);
    return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    auto c = parse(in);
    if (!c.message_feed.empty()) {
        std::filesystem::path feed(c.message_feed);
        if (feed.is_relative())
            c.message_feed = (std::filesystem::path(path).parent_path() / feed).lexically_normal().string();
    }
    return c;
}

std::string ScenarioConfig::to_text() const
{
    std::ostringstream out;
    out << "seed = " << seed << '\n'
        << "n_envoys = " << n_envoys << '\n'
        << "stake_distribution = \"" << stake_distribution.to_string() << "\"\n"
        << "K = " << K << '\n'
        << "h = " << format_real(h) << '\n'
        << "alpha = " << format_real(alpha) << '\n'
        << "tau = " << tau << '\n'
        << "theta = " << theta.to_string() << '\n';
    if (source_k)
        out << "source_k = " << *source_k << '\n';
    out << "overhead_epsilon = " << format_real(overhead_epsilon) << '\n';
    if (symbol_size)
        out << "symbol_size = " << *symbol_size << '\n';
    out << "codec = " << fountain::to_string(codec) << '\n'
        << "n_messages = " << n_messages << '\n'
        << "payload_size = " << payload_size << '\n'
        << "adversary_strategy = " << to_string(adversary_strategy) << '\n'
        << "latency = \"" << latency.to_string() << "\"\n"
        << "message_deadline = " << message_deadline << '\n'
        << "message_interval = " << message_interval << '\n'
        << "expect_commit_rate = " << format_real(expect_commit_rate) << '\n'
        << "threads = " << threads << '\n';
    if (!message_feed.empty())
        out << "message_feed = \"" << message_feed << "\"\n";
    return out.str();
}

nlohmann::json ScenarioConfig::to_json() const
{
    // threads is deliberately absent: it must not change the report.
    nlohmann::json j{{"seed", seed},
                     {"n_envoys", n_envoys},
                     {"stake_distribution", stake_distribution.to_string()},
                     {"K", K},
                     {"h", h},
                     {"alpha", alpha},
                     {"tau", tau},
                     {"theta", theta.to_string()},
                     {"overhead_epsilon", overhead_epsilon},
                     {"codec", fountain::to_string(codec)},
                     {"n_messages", n_messages},
                     {"payload_size", payload_size},
                     {"adversary_strategy", to_string(adversary_strategy)},
                     {"latency", latency.to_string()},
                     {"message_deadline", message_deadline},
                     {"message_interval", message_interval},
                     {"expect_commit_rate", expect_commit_rate}};
    j["source_k"] = source_k ? nlohmann::json(*source_k) : nlohmann::json(nullptr);
    j["symbol_size"] = symbol_size ? nlohmann::json(*symbol_size) : nlohmann::json(nullptr);
    j["message_feed"] = message_feed.empty() ? nlohmann::json(nullptr) : nlohmann::json(message_feed);
    return j;
}

sortition::SortitionParams ScenarioConfig::sortition_params() const
{
    return rekey("theta", [&] { return sortition::SortitionParams(tau, theta, K); });
}

params::SecurityModel ScenarioConfig::security_model() const
{
    return params::SecurityModel{h, alpha, tau, theta.to_double(), K};
}

fountain::CodecConfig ScenarioConfig::codec_config(std::size_t max_message_size) const
{
    const auto sp = sortition_params();
    auto out = fountain::CodecConfig::for_params(sp, max_message_size, overhead_epsilon, codec);
    if (source_k) {
        out.source_k = *source_k;
        out.symbol_size = static_cast<std::uint32_t>(std::max<std::size_t>(
            1, (max_message_size + *source_k - 1) / std::max<std::uint32_t>(1, *source_k)));
    }
    if (symbol_size)
        out.symbol_size = *symbol_size;
    out.validate(sp.vote_threshold());
    if (out.capacity() < max_message_size)
        throw ConfigError("source_k * symbol_size is below the largest canonical message", "symbol_size");
    return out;
}

std::uint64_t Universe::stake_of(Role r) const
{
    std::uint64_t s = 0;
    for (const auto& e : envoys)
        if (e.role == r)
            s += e.record.stake;
    return s;
}

std::size_t Universe::count_of(Role r) const
{
    return static_cast<std::size_t>(
        std::count_if(envoys.begin(), envoys.end(), [r](const Envoy& e) { return e.role == r; }));
}

Universe build_universe(const ScenarioConfig& config)
{
    validate(config);
    const std::size_t n = config.n_envoys;

    std::vector<long double> weights(n, 1.0L);
    if (config.stake_distribution.kind == StakeDistribution::Kind::zipf) {
        for (std::size_t i = 0; i < n; ++i)
            weights[i] = std::pow(static_cast<long double>(i + 1), -static_cast<long double>(config.stake_distribution.exponent));
    } else if (config.stake_distribution.kind == StakeDistribution::Kind::explicit_list) {
        for (std::size_t i = 0; i < n; ++i)
            weights[i] = static_cast<long double>(config.stake_distribution.weights[i]);
    }
    const auto stakes = normalize_stakes(weights, config.K);
    for (std::size_t i = 0; i < n; ++i)
        if (stakes[i] == 0)
            throw ConfigError("envoy " + std::to_string(i) + " would hold zero stake; raise K or lower n_envoys",
                              "stake_distribution");

    Universe u{reducer::StakeRegistry(config.K), std::vector<Envoy>(n)};
    parallel_for(n, config.threads, [&](std::size_t i) {
        Bytes buf;
        put_be64(buf, config.seed);
        put_be32(buf, static_cast<std::uint32_t>(i));
        const vrf::Seed seed = sha256({as_bytes("eden/simnet/key"), buf});
        auto& e = u.envoys[i];
        e.keys = vrf::keygen(seed);
        e.record = envoy::EnvoyRecord{static_cast<std::uint32_t>(i), e.keys.public_key, stakes[i]};
    });

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(config.seed, "eden/simnet/partition"));
    std::shuffle(order.begin(), order.end(), rng);

    const long double total = static_cast<long double>(config.K);
    // Integer budgets; the slack absorbs decimal fractions like 0.6 landing just below themselves.
    auto budget = [](long double target) { return static_cast<std::uint64_t>(std::floor(target * (1.0L + 1e-12L))); };
    auto fill = [&](Role role, std::uint64_t target, const char* key, const char* what) {
        std::uint64_t sum = 0;
        for (std::size_t i : order) {
            auto& e = u.envoys[i];
            if (e.role != Role::honest || sum + e.record.stake > target)
                continue;
            e.role = role;
            sum += e.record.stake;
        }
        if (target >= 1 && sum == 0)
            throw ConfigError(std::string("no envoy is small enough to realize the ") + what + " stake target of "
                                  + std::to_string(target) + "; the partition is unachievable with these stakes",
                              key);
    };
    fill(Role::adversary, budget((1.0L - config.h) * config.alpha * total), "h", "adversary");
    fill(Role::offline, budget((1.0L - config.alpha) * total), "alpha", "offline");

    for (const auto& e : u.envoys)
        u.registry.add(e.record);
    return u;
}

std::vector<envoy::CrossChainMessage> scenario_messages(const ScenarioConfig& config)
{
    if (!config.message_feed.empty()) {
        std::ifstream in(config.message_feed);
        if (!in)
            throw ConfigError("cannot open '" + config.message_feed + "'", "message_feed");
        auto feed = rekey("message_feed", [&] { return envoy::read_message_feed(in); });
        if (feed.empty())
            throw ConfigError("feed holds no messages", "message_feed");
        return feed;
    }
    std::vector<envoy::CrossChainMessage> out(config.n_messages);
    for (std::uint32_t i = 0; i < config.n_messages; ++i) {
        std::mt19937_64 rng(derive_seed(config.seed, "eden/simnet/message", i));
        auto& m = out[i];
        m.source_chain_id = 1;
        m.sequence_number = i + 1;
        m.commit_height = 1000 + i;
        m.payload.resize(config.payload_size);
        for (auto& b : m.payload)
            b = static_cast<std::uint8_t>(rng());
    }
    return out;
}

std::uint64_t PacketCounts::rejected_total() const
{
    std::uint64_t n = 0;
    for (const auto& [_, c] : rejected)
        n += c;
    return n;
}

namespace {

enum class Origin { honest, forge, inflate, corrupt_symbols, replay };

std::string_view origin_name(Origin o)
{
    switch (o) {
    case Origin::honest: return "honest";
    case Origin::forge: return "forge";
    case Origin::inflate: return "inflate";
    case Origin::corrupt_symbols: return "corrupt-symbols";
    case Origin::replay: return "replay";
    }
    return "?";
}

struct Scheduled {
    std::uint64_t tick = 0;
    int phase = 0;  ///< 0: packet delivery, 1: deadline (after same-tick deliveries)
    std::uint32_t message = 0;
    std::uint32_t envoy_id = 0;
    Origin origin = Origin::honest;
    envoy::VotePacket packet;

    auto key() const { return std::tuple(tick, phase, message, envoy_id, static_cast<int>(origin)); }
};

struct MessageContext {
    envoy::CrossChainMessage message;
    Bytes canonical;
    vrf::MessageHash hash;
    std::optional<envoy::CrossChainMessage> forged;
    Bytes forged_canonical;
    std::optional<vrf::MessageHash> forged_hash;
    std::uint64_t start = 0;
    std::uint64_t deadline = 0;
};

std::uint64_t sample_delay(const ScenarioConfig& config, std::uint32_t message, std::uint32_t envoy_id, std::uint64_t salt)
{
    if (config.latency.kind == LatencyModel::Kind::fixed)
        return config.latency.lo;
    std::mt19937_64 rng(derive_seed(config.seed, "eden/simnet/latency", (std::uint64_t{message} << 32) | envoy_id, salt));
    return std::uniform_int_distribution<std::uint64_t>(config.latency.lo, config.latency.hi)(rng);
}

/// Symbol ids that differ from the selected set, with scrambled payloads.
envoy::VotePacket corrupt_packet(envoy::VotePacket packet, const MessageContext& ctx, const fountain::CodecConfig& codec)
{
    std::vector<std::uint32_t> ids;
    for (const auto& s : packet.symbols)
        ids.push_back(s.symbol_id);
    if (ids.size() >= codec.tau) {
        ids.pop_back();
    } else {
        std::uint32_t fresh = 0;
        while (std::binary_search(ids.begin(), ids.end(), fresh))
            ++fresh;
        ids.back() = fresh;
        std::sort(ids.begin(), ids.end());
    }
    packet.symbols = fountain::encode_subset(ctx.canonical, codec, ids);
    for (auto& s : packet.symbols)
        for (auto& b : s.payload)
            b ^= 0x5a;
    return packet;
}

/// Packets one online envoy sends for one message, before replays.
std::vector<Scheduled> produce(const ScenarioConfig& config, const Envoy& e, std::uint32_t index,
                               const MessageContext& ctx, const sortition::SortitionParams& sp,
                               const fountain::CodecConfig& codec)
{
    std::vector<Scheduled> out;
    auto schedule = [&](envoy::VotePacket p, Origin origin) {
        Scheduled s;
        s.tick = ctx.start + sample_delay(config, index, e.record.envoy_id, 0);
        s.message = index;
        s.envoy_id = e.record.envoy_id;
        s.origin = origin;
        s.packet = std::move(p);
        out.push_back(std::move(s));
    };

    if (e.role == Role::honest) {
        if (auto p = envoy::process_message(ctx.message, e.keys, e.record, sp, codec))
            schedule(std::move(*p), Origin::honest);
        return out;
    }

    switch (config.adversary_strategy) {
    case AdversaryStrategy::none:
    case AdversaryStrategy::replay:
        break;
    case AdversaryStrategy::forge:
        if (auto p = envoy::process_message(*ctx.forged, e.keys, e.record, sp, codec))
            schedule(std::move(*p), Origin::forge);
        break;
    case AdversaryStrategy::inflate: {
        vrf::Prover prover(e.keys, ctx.hash);
        const auto v = sortition::compute_votes(prover.output(), e.record.stake, sp);
        auto p = envoy::assemble_packet(ctx.canonical, ctx.hash, e.record.envoy_id, prover.output(), prover.proof(), v,
                                        codec);
        p.claimed_votes.votes = v.votes + 1;
        schedule(std::move(p), Origin::inflate);
        break;
    }
    case AdversaryStrategy::corrupt_symbols:
        if (auto p = envoy::process_message(ctx.message, e.keys, e.record, sp, codec))
            schedule(corrupt_packet(std::move(*p), ctx, codec), Origin::corrupt_symbols);
        break;
    }
    return out;
}

} // namespace

SimReport run(const ScenarioConfig& config)
{
    return run(config, build_universe(config));
}

SimReport run(const ScenarioConfig& config, const Universe& universe)
{
    validate(config);
    const auto sp = config.sortition_params();
    const auto messages = scenario_messages(config);

    std::vector<MessageContext> contexts(messages.size());
    std::size_t max_size = 0;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        auto& c = contexts[i];
        c.message = messages[i];
        c.canonical = envoy::canonical_encode(c.message);
        c.hash = vrf::MessageHash{sha256(c.canonical)};
        c.start = i * config.message_interval;
        c.deadline = c.start + config.message_deadline;
        max_size = std::max(max_size, c.canonical.size());
        if (config.adversary_strategy == AdversaryStrategy::forge) {
            c.forged = c.message;
            if (c.forged->payload.empty())
                c.forged->payload.push_back(0);
            c.forged->payload[0] ^= 0xff;
            c.forged_canonical = envoy::canonical_encode(*c.forged);
            c.forged_hash = vrf::MessageHash{sha256(c.forged_canonical)};
            max_size = std::max(max_size, c.forged_canonical.size());
        }
    }
    const auto codec = config.codec_config(max_size);

    std::vector<const Envoy*> online;
    for (const auto& e : universe.envoys)
        if (e.role != Role::offline)
            online.push_back(&e);

    SimReport report;
    std::vector<Scheduled> queue;
    for (std::uint32_t i = 0; i < contexts.size(); ++i) {
        const auto& ctx = contexts[i];
        std::vector<std::vector<Scheduled>> produced(online.size());
        parallel_for(online.size(), config.threads,
                     [&](std::size_t j) { produced[j] = produce(config, *online[j], i, ctx, sp, codec); });

        std::vector<const Scheduled*> honest;
        for (auto& batch : produced)
            for (auto& s : batch)
                if (s.origin == Origin::honest)
                    honest.push_back(&s);

        std::vector<Scheduled> replays;
        if (config.adversary_strategy == AdversaryStrategy::replay && !honest.empty()) {
            std::size_t ordinal = 0;
            for (const Envoy* e : online) {
                if (e->role != Role::adversary)
                    continue;
                const Scheduled& original = *honest[ordinal++ % honest.size()];
                Scheduled r = original;
                r.origin = Origin::replay;
                r.tick = original.tick + 1 + sample_delay(config, i, e->record.envoy_id, 1);
                replays.push_back(std::move(r));
            }
        }

        std::uint64_t bytes = 0, symbol_bytes = 0;
        auto enqueue = [&](Scheduled&& s) {
            bytes += envoy::packet_wire_size(s.packet);
            symbol_bytes += s.packet.symbols.size() * (4 + std::uint64_t{codec.symbol_size});
            report.packets[std::string(origin_name(s.origin))].sent++;
            queue.push_back(std::move(s));
        };
        for (auto& batch : produced)
            for (auto& s : batch)
                enqueue(std::move(s));
        for (auto& r : replays)
            enqueue(std::move(r));

        Scheduled deadline;
        deadline.tick = ctx.deadline;
        deadline.phase = 1;
        deadline.message = i;
        queue.push_back(std::move(deadline));

        MessageOutcome m;
        m.index = i;
        m.message_hash = ctx.hash;
        m.start_tick = ctx.start;
        m.bytes_transmitted = bytes;
        m.symbol_bytes = symbol_bytes;
        m.naive_bytes = online.size() * std::uint64_t{ctx.canonical.size()};
        report.messages.push_back(m);
    }
    std::sort(queue.begin(), queue.end(), [](const Scheduled& a, const Scheduled& b) { return a.key() < b.key(); });

    reducer::Reducer red(universe.registry, sp, codec);
    std::vector<bool> closed(contexts.size(), false);
    for (const auto& s : queue) {
        const auto& ctx = contexts[s.message];
        if (s.phase == 1) {
            closed[s.message] = true;
            auto& m = report.messages[s.message];
            m.status = red.finalize(ctx.hash, ctx.deadline, s.tick);
            if (const auto* st = red.state(ctx.hash)) {
                m.final_votes = st->verified_votes();
                m.votes_at_commit = st->votes_at_commit();
                if (st->committed())
                    m.commit_tick = st->committed()->commit_tick;
                m.symbols_received = st->symbols_received();
                m.distinct_symbols = st->symbol_pool().size();
                report.events.push_back(reducer::event_record(*st, m.status));
            } else {
                reducer::ReducerState empty(ctx.hash);
                report.events.push_back(reducer::event_record(empty, m.status));
            }
            if (ctx.forged_hash) {
                auto status = red.finalize(*ctx.forged_hash, ctx.deadline, s.tick);
                if (const auto* st = red.state(*ctx.forged_hash)) {
                    report.forged_max_votes = std::max(report.forged_max_votes, st->verified_votes());
                    report.events.push_back(reducer::event_record(*st, status));
                }
            }
            continue;
        }

        auto& counts = report.packets[std::string(origin_name(s.origin))];
        if (closed[s.message]) {
            counts.rejected["after-deadline"]++;
            continue;
        }
        const auto event = red.submit(s.packet, s.tick);
        if (const auto* r = std::get_if<reducer::Rejected>(&event)) {
            counts.rejected[std::string(reducer::to_string(r->reason))]++;
            continue;
        }
        counts.accepted++;
        if (const auto* c = std::get_if<reducer::Committed>(&event))
            if (c->commit.message_hash != ctx.hash)
                report.forged_commits++;
    }

    std::uint64_t committed = 0, latency_sum = 0, received = 0, distinct = 0;
    std::vector<double> votes;
    for (const auto& m : report.messages) {
        if (m.status == reducer::FinalStatus::committed) {
            ++committed;
            latency_sum += *m.commit_tick - m.start_tick;
        }
        votes.push_back(static_cast<double>(m.final_votes));
        received += m.symbols_received;
        distinct += m.distinct_symbols;
        report.bytes_transmitted += m.bytes_transmitted;
        report.naive_baseline_bytes += m.naive_bytes;
    }
    report.honest_commit_rate = static_cast<double>(committed) / static_cast<double>(report.messages.size());
    if (committed)
        report.mean_commit_latency = static_cast<double>(latency_sum) / static_cast<double>(committed);
    const auto vs = stats_of(votes);
    report.vote_sum_mean = vs.mean;
    report.vote_sum_variance = vs.variance;
    report.duplicate_symbol_ratio = received ? 1.0 - static_cast<double>(distinct) / static_cast<double>(received) : 0.0;
    return report;
}

nlohmann::json SimReport::to_json(const ScenarioConfig& config, const Universe& universe) const
{
    nlohmann::json j;
    j["config"] = config.to_json();

    const auto sp = config.sortition_params();
    j["sortition"] = {{"tau", sp.tau()},
                      {"theta", sp.theta().to_string()},
                      {"vote_threshold", sp.vote_threshold()},
                      {"K", sp.total_supply()}};
    try {
        j["analytic"] = params::tail_report(config.security_model());
    } catch (const DomainError&) {
        j["analytic"] = nullptr;
    }

    nlohmann::json cohorts;
    for (auto role : {Role::honest, Role::adversary, Role::offline})
        cohorts[std::string(to_string(role))] = {{"envoys", universe.count_of(role)},
                                                 {"stake", universe.stake_of(role)}};
    j["universe"] = cohorts;

    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"index", m.index},
                        {"message_hash_hex", to_hex(m.message_hash.digest)},
                        {"status", reducer::to_string(m.status)},
                        {"final_votes", m.final_votes},
                        {"votes_at_commit", m.votes_at_commit},
                        {"commit_tick", m.commit_tick ? nlohmann::json(*m.commit_tick) : nlohmann::json(nullptr)},
                        {"start_tick", m.start_tick},
                        {"bytes_transmitted", m.bytes_transmitted},
                        {"symbol_bytes", m.symbol_bytes},
                        {"naive_bytes", m.naive_bytes},
                        {"symbols_received", m.symbols_received},
                        {"distinct_symbols", m.distinct_symbols}});
    }
    j["messages"] = std::move(msgs);

    nlohmann::json pk = nlohmann::json::object();
    for (const auto& [origin, c] : packets)
        pk[origin] = {{"sent", c.sent}, {"accepted", c.accepted}, {"rejected", c.rejected_total()},
                      {"rejected_by_reason", c.rejected}};
    j["packets"] = std::move(pk);

    j["aggregates"] = {
        {"honest_commit_rate", honest_commit_rate},
        {"forged_commits", forged_commits},
        {"forged_max_votes", forged_max_votes},
        {"mean_commit_latency", mean_commit_latency ? nlohmann::json(*mean_commit_latency) : nlohmann::json(nullptr)},
        {"vote_sum_mean", vote_sum_mean},
        {"vote_sum_variance", vote_sum_variance},
        {"duplicate_symbol_ratio", duplicate_symbol_ratio},
        {"bytes_transmitted", bytes_transmitted},
        {"naive_baseline_bytes", naive_baseline_bytes},
    };
    return j;
}

std::string SimReport::to_csv() const
{
    std::ostringstream out;
    out << "index,message_hash_hex,status,final_votes,votes_at_commit,commit_tick,start_tick,"
           "bytes_transmitted,symbol_bytes,naive_bytes,symbols_received,distinct_symbols\n";
    for (const auto& m : messages) {
        out << m.index << ',' << to_hex(m.message_hash.digest) << ',' << reducer::to_string(m.status) << ','
            << m.final_votes << ',' << m.votes_at_commit << ',';
        if (m.commit_tick)
            out << *m.commit_tick;
        out << ',' << m.start_tick << ',' << m.bytes_transmitted << ',' << m.symbol_bytes << ',' << m.naive_bytes
            << ',' << m.symbols_received << ',' << m.distinct_symbols << '\n';
    }
    return out.str();
}

VoteSumSummary vote_sum_experiment(const ScenarioConfig& config, std::uint64_t n_trials)
{
    return vote_sum_experiment(config, build_universe(config), n_trials);
}

VoteSumSummary vote_sum_experiment(const ScenarioConfig& config, const Universe& universe, std::uint64_t n_trials)
{
    if (n_trials < 100)
        throw DomainError("vote_sum_experiment needs at least 100 trials");
    const auto sp = config.sortition_params();

    std::vector<const Envoy*> online;
    for (const auto& e : universe.envoys)
        if (e.role != Role::offline)
            online.push_back(&e);

    std::vector<std::uint64_t> xh(n_trials), xa(n_trials);
    parallel_for(n_trials, config.threads, [&](std::size_t t) {
        Bytes buf;
        put_be64(buf, config.seed);
        put_be64(buf, t);
        const vrf::MessageHash hash{sha256({as_bytes("eden/simnet/trial"), buf})};
        std::uint64_t h = 0, a = 0;
        for (const Envoy* e : online) {
            vrf::Prover prover(e->keys, hash);
            const auto v = sortition::compute_votes(prover.output(), e->record.stake, sp).votes;
            (e->role == Role::honest ? h : a) += v;
        }
        xh[t] = h;
        xa[t] = a;
    });

    VoteSumSummary s;
    s.n_trials = n_trials;
    s.honest_stake = universe.stake_of(Role::honest);
    s.adversary_stake = universe.stake_of(Role::adversary);
    std::vector<double> dh, da, dy;
    for (std::size_t t = 0; t < n_trials; ++t) {
        dh.push_back(static_cast<double>(xh[t]));
        da.push_back(static_cast<double>(xa[t]));
        const double y = static_cast<double>(xh[t]) - 2.0 * static_cast<double>(xa[t]);
        dy.push_back(y);
        s.honest_shortfalls += xh[t] < sp.vote_threshold();
        s.adversary_reaches += xa[t] >= sp.vote_threshold();
        s.supermajority_fails += y <= 0;
    }
    s.honest = stats_of(dh);
    s.adversary = stats_of(da);
    s.supermajority = stats_of(dy);

    const double p = sp.probability_approx();
    s.approximation_valid = static_cast<double>(s.honest_stake) * p > 5.0
        && (s.adversary_stake == 0 || static_cast<double>(s.adversary_stake) * p > 5.0);
    try {
        s.analytic = params::tail_report(config.security_model());
    } catch (const DomainError&) {
    }
    return s;
}

nlohmann::json VoteSumSummary::to_json() const
{
    auto cohort = [](const CohortStats& c) { return nlohmann::json{{"mean", c.mean}, {"variance", c.variance}}; };
    return {{"n_trials", n_trials},
            {"honest", cohort(honest)},
            {"adversary", cohort(adversary)},
            {"supermajority", cohort(supermajority)},
            {"analytic", analytic},
            {"honest_stake", honest_stake},
            {"adversary_stake", adversary_stake},
            {"honest_shortfalls", honest_shortfalls},
            {"adversary_reaches", adversary_reaches},
            {"supermajority_fails", supermajority_fails},
            {"approximation_valid", approximation_valid},
            {"warning", approximation_valid ? nlohmann::json(nullptr)
                                            : nlohmann::json("normal approximation invalid: S*p <= 5")}};
}

} // namespace eden::simnet
