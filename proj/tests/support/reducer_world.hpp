#pragma once

// Ten envoys holding a 10^4 supply, tau = 100, theta = 0.3: about 100 expected votes per
// message against a threshold of 30, with 40-byte payloads.

#include "eden/envoy.hpp"
#include "eden/reducer.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace eden::testing {

inline envoy::CrossChainMessage make_message(std::uint64_t seq, std::uint8_t fill = 0x11)
{
    return {9, seq, 500, Bytes(40, fill)};
}

struct ReducerWorld {
    sortition::SortitionParams params{100, sortition::Ratio{3, 10}, 10'000};
    fountain::CodecConfig codec = fountain::CodecConfig::for_params(params, envoy::kCanonicalHeaderSize + 40);
    reducer::StakeRegistry registry{10'000};
    std::vector<vrf::KeyPair> keys;

    ReducerWorld()
    {
        for (std::uint32_t i = 0; i < 10; ++i) {
            vrf::Seed seed{};
            seed[0] = static_cast<std::uint8_t>(i + 1);
            keys.push_back(vrf::keygen(seed));
            registry.add({i, keys.back().public_key, 1000});
        }
    }

    reducer::ReducerContext context(reducer::VerificationPolicy policy = {},
                                    reducer::CommitLedger* ledger = nullptr) const
    {
        return reducer::ReducerContext{registry, params, codec, policy, ledger};
    }

    std::vector<envoy::VotePacket> packets(const envoy::CrossChainMessage& msg) const
    {
        std::vector<envoy::VotePacket> out;
        for (std::uint32_t i = 0; i < keys.size(); ++i)
            if (auto p = envoy::process_message(msg, keys[i], *registry.find(i), params, codec))
                out.push_back(std::move(*p));
        return out;
    }

    /// A packet from envoy i whose proof and votes verify but whose symbols encode `body`.
    envoy::VotePacket packet_over(std::uint32_t i, const Bytes& body, const vrf::MessageHash& hash) const
    {
        vrf::Prover prover(keys[i], hash);
        const auto v = sortition::compute_votes(prover.output(), 1000, params);
        return envoy::assemble_packet(body, hash, i, prover.output(), prover.proof(), v, codec);
    }
};

struct Forgery {
    const char* name;
    reducer::RejectReason expected;
    bool reducer::VerificationPolicy::*check;
    envoy::VotePacket packet;
    bool needs_original;  ///< submit the honest packet first
};

/// One forged packet per verification step, built from honest packet `base` of `msg`.
/// Each is caught by exactly that step.
inline std::vector<Forgery> forgeries(const ReducerWorld& w, const envoy::CrossChainMessage& msg,
                                      const envoy::VotePacket& base, std::uint64_t rng_seed = 1)
{
    using reducer::RejectReason;
    using reducer::VerificationPolicy;
    const auto hash = envoy::message_hash(msg);
    const auto canonical = envoy::canonical_encode(msg);
    const auto stake = w.registry.find(base.envoy_id)->stake;
    std::vector<Forgery> out;

    out.push_back({"duplicate", RejectReason::duplicate, &VerificationPolicy::check_duplicates, base, true});

    {
        // Self-consistent packet for an output the key never produced, claiming more votes.
        std::mt19937_64 rng(rng_seed);
        sortition::UnitRandom x;
        sortition::VoteWeight v;
        do {
            Digest d{};
            for (auto& b : d)
                b = static_cast<std::uint8_t>(rng());
            x = sortition::UnitRandom::from_bytes(d);
            v = sortition::compute_votes(x, stake, w.params);
        } while (v.votes <= base.claimed_votes.votes);
        out.push_back({"proof", RejectReason::proof, &VerificationPolicy::check_proof,
                       envoy::assemble_packet(canonical, hash, base.envoy_id, x, base.vrf_proof, v, w.codec), false});
    }
    {
        // Honest symbols (they follow the recomputed count), inflated claim.
        auto p = base;
        p.claimed_votes.votes += 5;
        out.push_back({"votes", RejectReason::votes, &VerificationPolicy::check_votes, p, false});
    }
    {
        std::vector<std::uint32_t> ids;
        for (const auto& s : base.symbols)
            ids.push_back(s.symbol_id);
        std::uint32_t fresh = 0;
        while (std::find(ids.begin(), ids.end(), fresh) != ids.end())
            ++fresh;
        ids.back() = fresh;
        auto p = base;
        p.symbols = fountain::encode_subset(canonical, w.codec, ids);
        out.push_back({"symbols", RejectReason::symbols, &VerificationPolicy::check_symbols, p, false});
    }
    return out;
}

} // namespace eden::testing
