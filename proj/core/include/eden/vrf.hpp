#pragma once

#include "eden/bytes.hpp"
#include "eden/sortition.hpp"

#include <memory>
#include <optional>

// ECVRF-P256-SHA256-TAI (RFC 9381, suite 0x01): try-and-increment hash-to-curve,
// RFC 6979 nonces, 16-byte challenges. Proofs are Gamma (33) || c (16) || s (32).
namespace eden::vrf {

inline constexpr std::size_t kSecretKeySize = 32;
inline constexpr std::size_t kPublicKeySize = 33;
inline constexpr std::size_t kProofSize = 81;
inline constexpr std::size_t kSeedSize = 32;

using Seed = std::array<std::uint8_t, kSeedSize>;

struct KeyPair {
    Bytes secret_key; ///< big-endian scalar in [1, q)
    Bytes public_key; ///< SEC1 compressed point

    friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

/// HASH(msg): SHA-256 of the canonical message bytes.
struct MessageHash {
    Digest digest{};

    friend auto operator<=>(const MessageHash&, const MessageHash&) = default;
};

struct VrfOutput {
    sortition::UnitRandom random;
    Bytes proof;

    friend bool operator==(const VrfOutput&, const VrfOutput&) = default;
};

/// Deterministic key derivation from 32 bytes of entropy.
KeyPair keygen(const Seed& seed);
/// 32 bytes from the OpenSSL CSPRNG, for keygen outside of simulations.
Seed random_seed();
/// Throws KeyError when the secret is not a scalar in [1, q).
Bytes derive_public_key(ByteView secret_key);

/// RFC 9381 prove over an arbitrary alpha string.
Bytes prove(ByteView secret_key, ByteView alpha);
/// beta for a syntactically valid proof; nullopt otherwise. Does not verify.
std::optional<Digest> proof_to_hash(ByteView proof);
/// RFC 9381 verify: beta on success, nullopt on any failure (never throws).
std::optional<Digest> verify_proof(ByteView public_key, ByteView alpha, ByteView proof) noexcept;

/// Two-phase evaluation: the output is available after one scalar multiplication,
/// the proof only when requested. Lets an abstaining envoy skip the proof.
class Prover {
public:
    Prover(const KeyPair& keys, const MessageHash& input);
    ~Prover();
    Prover(Prover&&) noexcept;
    Prover& operator=(Prover&&) noexcept;

    const sortition::UnitRandom& output() const noexcept { return output_; }
    Bytes proof() const;

private:
    struct State;
    std::unique_ptr<State> state_;
    sortition::UnitRandom output_;
};

VrfOutput evaluate(const KeyPair& keys, const MessageHash& input);
/// Derives the public key first; prefer the KeyPair overload in loops.
VrfOutput evaluate(ByteView secret_key, const MessageHash& input);

/// Accepts iff the proof verifies under `public_key` and its hash equals `out.random`.
bool verify(ByteView public_key, const MessageHash& input, const VrfOutput& out) noexcept;

} // namespace eden::vrf
