#include "eden/vrf.hpp"
#include "eden/error.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/rand.h>
#include <openssl/err.h>

#include <cstring>
#include <string>
#include <unordered_map>

namespace eden::vrf {

namespace {

constexpr std::uint8_t kSuite = 0x01;
constexpr std::size_t kChallengeSize = 16;
constexpr std::size_t kScalarSize = 32;

struct BnFree {
    void operator()(BIGNUM* p) const { BN_clear_free(p); }
};
struct BnCtxFree {
    void operator()(BN_CTX* p) const { BN_CTX_free(p); }
};
struct PointFree {
    void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct GroupFree {
    void operator()(EC_GROUP* p) const { EC_GROUP_free(p); }
};

using Bn = std::unique_ptr<BIGNUM, BnFree>;
using BnCtx = std::unique_ptr<BN_CTX, BnCtxFree>;
using Point = std::unique_ptr<EC_POINT, PointFree>;

[[noreturn]] void crypto_failure(const char* what)
{
    throw Error(std::string("ECVRF: ") + what);
}

Bn new_bn()
{
    Bn bn(BN_new());
    if (!bn)
        crypto_failure("BN_new");
    return bn;
}

Bn bn_from(ByteView bytes)
{
    Bn bn(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!bn)
        crypto_failure("BN_bin2bn");
    return bn;
}

void bn_to(const BIGNUM* bn, std::uint8_t* out, std::size_t len)
{
    if (BN_bn2binpad(bn, out, static_cast<int>(len)) != static_cast<int>(len))
        crypto_failure("BN_bn2binpad");
}

/// P-256 group, one per thread.
class Curve {
public:
    Curve() : group_(EC_GROUP_new_by_curve_name(NID_X9_62_prime256v1)), ctx_(BN_CTX_new())
    {
        if (!group_ || !ctx_ || !p_ || !a_ || !b_
            || EC_GROUP_get_curve(group_.get(), p_.get(), a_.get(), b_.get(), ctx_.get()) != 1)
            crypto_failure("group setup");
    }

    static Curve& instance()
    {
        thread_local Curve curve;
        return curve;
    }

    const EC_GROUP* group() const { return group_.get(); }
    const BIGNUM* order() const { return EC_GROUP_get0_order(group_.get()); }
    BN_CTX* ctx() const { return ctx_.get(); }

    Point new_point() const
    {
        Point p(EC_POINT_new(group_.get()));
        if (!p)
            crypto_failure("EC_POINT_new");
        return p;
    }

    /// SEC1 compressed, 33 bytes. The identity has no such encoding and is rejected upstream.
    std::array<std::uint8_t, kPublicKeySize> encode(const EC_POINT* p) const
    {
        std::array<std::uint8_t, kPublicKeySize> out{};
        if (EC_POINT_point2oct(group_.get(), p, POINT_CONVERSION_COMPRESSED, out.data(), out.size(), ctx_.get())
            != out.size())
            crypto_failure("point2oct");
        return out;
    }

    std::optional<Point> decode(ByteView bytes) const
    {
        if (bytes.size() != kPublicKeySize || (bytes[0] != 0x02 && bytes[0] != 0x03))
            return std::nullopt;
        Point p = new_point();
        if (EC_POINT_oct2point(group_.get(), p.get(), bytes.data(), bytes.size(), ctx_.get()) != 1) {
            ERR_clear_error();
            return std::nullopt;
        }
        return p;
    }

    /// decode() memoized for public keys, which repeat across packets.
    std::optional<Point> decode_public_key(ByteView bytes)
    {
        std::string key(bytes.begin(), bytes.end());
        if (auto it = key_cache_.find(key); it != key_cache_.end())
            return Point(EC_POINT_dup(it->second.get(), group_.get()));
        auto p = decode(bytes);
        if (!p)
            return std::nullopt;
        if (key_cache_.size() >= 4096)
            key_cache_.clear();
        key_cache_.emplace(std::move(key), Point(EC_POINT_dup(p->get(), group_.get())));
        return p;
    }

    /// Whether some curve point has affine x = `x` (big-endian), via the Kronecker symbol of x^3 + ax + b.
    bool has_x(ByteView x) const
    {
        Bn xb = bn_from(x);
        if (BN_cmp(xb.get(), p_.get()) >= 0)
            return false;
        Bn rhs = new_bn(), t = new_bn();
        if (BN_mod_sqr(t.get(), xb.get(), p_.get(), ctx_.get()) != 1
            || BN_mod_add(t.get(), t.get(), a_.get(), p_.get(), ctx_.get()) != 1
            || BN_mod_mul(rhs.get(), t.get(), xb.get(), p_.get(), ctx_.get()) != 1
            || BN_mod_add(rhs.get(), rhs.get(), b_.get(), p_.get(), ctx_.get()) != 1)
            crypto_failure("curve equation");
        if (BN_is_zero(rhs.get()))
            return true;
        return BN_kronecker(rhs.get(), p_.get(), ctx_.get()) == 1;
    }

    /// g_scalar * G + p_scalar * P (either term may be null).
    Point mul(const BIGNUM* g_scalar, const EC_POINT* p, const BIGNUM* p_scalar) const
    {
        Point r = new_point();
        if (EC_POINT_mul(group_.get(), r.get(), g_scalar, p, p_scalar, ctx_.get()) != 1)
            crypto_failure("EC_POINT_mul");
        return r;
    }

    Point sub(const EC_POINT* a, const EC_POINT* b) const
    {
        Point neg = new_point();
        Point r = new_point();
        if (EC_POINT_copy(neg.get(), b) != 1 || EC_POINT_invert(group_.get(), neg.get(), ctx_.get()) != 1
            || EC_POINT_add(group_.get(), r.get(), a, neg.get(), ctx_.get()) != 1)
            crypto_failure("point subtraction");
        return r;
    }

private:
    std::unique_ptr<EC_GROUP, GroupFree> group_;
    BnCtx ctx_;
    Bn p_{BN_new()}, a_{BN_new()}, b_{BN_new()};
    std::unordered_map<std::string, Point> key_cache_;
};

Bn parse_secret(ByteView secret_key)
{
    if (secret_key.size() != kSecretKeySize)
        throw KeyError("secret key must be 32 bytes");
    auto& curve = Curve::instance();
    Bn x = bn_from(secret_key);
    if (BN_is_zero(x.get()) || BN_cmp(x.get(), curve.order()) >= 0)
        throw KeyError("secret key is not a scalar in [1, q)");
    return x;
}

/// ECVRF_encode_to_curve_try_and_increment with salt = PK_string.
Point encode_to_curve(ByteView pk_string, ByteView alpha)
{
    auto& curve = Curve::instance();
    const std::uint8_t prefix[2] = {kSuite, 0x01};
    const std::uint8_t zero = 0x00;
    for (unsigned ctr = 0; ctr < 256; ++ctr) {
        const std::uint8_t ctr_byte = static_cast<std::uint8_t>(ctr);
        Digest h = sha256({ByteView(prefix), pk_string, alpha, ByteView(&ctr_byte, 1), ByteView(&zero, 1)});
        if (!curve.has_x(h))
            continue;
        std::array<std::uint8_t, kPublicKeySize> candidate{};
        candidate[0] = 0x02;
        std::memcpy(candidate.data() + 1, h.data(), h.size());
        if (auto point = curve.decode(candidate))
            return std::move(*point);
    }
    crypto_failure("encode_to_curve exhausted its counter");
}

Digest hmac_sha256(ByteView key, std::initializer_list<ByteView> parts)
{
    Bytes data;
    for (auto part : parts)
        data.insert(data.end(), part.begin(), part.end());
    Digest out{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
        crypto_failure("HMAC");
    return out;
}

/// RFC 6979 section 3.2 with SHA-256, m = h_string.
Bn nonce_rfc6979(const BIGNUM* x, ByteView h_string)
{
    auto& curve = Curve::instance();
    const BIGNUM* q = curve.order();

    std::array<std::uint8_t, kScalarSize> x_octets{};
    bn_to(x, x_octets.data(), x_octets.size());

    Digest h1 = sha256(h_string);
    Bn z = bn_from(h1);
    if (BN_cmp(z.get(), q) >= 0)
        BN_sub(z.get(), z.get(), q);
    std::array<std::uint8_t, kScalarSize> h_octets{};
    bn_to(z.get(), h_octets.data(), h_octets.size());

    Digest v;
    Digest k;
    v.fill(0x01);
    k.fill(0x00);
    const std::uint8_t b0 = 0x00, b1 = 0x01;
    k = hmac_sha256(k, {v, ByteView(&b0, 1), x_octets, h_octets});
    v = hmac_sha256(k, {v});
    k = hmac_sha256(k, {v, ByteView(&b1, 1), x_octets, h_octets});
    v = hmac_sha256(k, {v});
    for (;;) {
        v = hmac_sha256(k, {v});
        Bn candidate = bn_from(v);
        if (!BN_is_zero(candidate.get()) && BN_cmp(candidate.get(), q) < 0)
            return candidate;
        k = hmac_sha256(k, {v, ByteView(&b0, 1)});
        v = hmac_sha256(k, {v});
    }
}

Bn challenge(std::initializer_list<const EC_POINT*> points)
{
    auto& curve = Curve::instance();
    Bytes str{kSuite, 0x02};
    for (const EC_POINT* p : points) {
        auto enc = curve.encode(p);
        str.insert(str.end(), enc.begin(), enc.end());
    }
    str.push_back(0x00);
    Digest c = sha256(str);
    return bn_from(ByteView(c.data(), kChallengeSize));
}

Digest gamma_to_hash(const std::array<std::uint8_t, kPublicKeySize>& gamma)
{
    const std::uint8_t prefix[2] = {kSuite, 0x03};
    const std::uint8_t zero = 0x00;
    return sha256({ByteView(prefix), gamma, ByteView(&zero, 1)});
}

struct DecodedProof {
    Point gamma;
    Bn c;
    Bn s;
};

std::optional<DecodedProof> decode_proof(ByteView proof)
{
    if (proof.size() != kProofSize)
        return std::nullopt;
    auto& curve = Curve::instance();
    auto gamma = curve.decode(proof.first(kPublicKeySize));
    if (!gamma)
        return std::nullopt;
    Bn c = bn_from(proof.subspan(kPublicKeySize, kChallengeSize));
    Bn s = bn_from(proof.subspan(kPublicKeySize + kChallengeSize, kScalarSize));
    if (BN_cmp(s.get(), curve.order()) >= 0)
        return std::nullopt;
    return DecodedProof{std::move(*gamma), std::move(c), std::move(s)};
}

} // namespace

struct Prover::State {
    Bn x;
    Point y;
    Point h;
    Point gamma;
    std::array<std::uint8_t, kPublicKeySize> gamma_string{};
};

Prover::Prover(const KeyPair& keys, const MessageHash& input) : state_(std::make_unique<State>())
{
    auto& curve = Curve::instance();
    state_->x = parse_secret(keys.secret_key);
    auto y = curve.decode_public_key(keys.public_key);
    if (!y)
        throw KeyError("public key is not a valid compressed P-256 point");
    state_->y = std::move(*y);
    state_->h = encode_to_curve(keys.public_key, input.digest);
    state_->gamma = curve.mul(nullptr, state_->h.get(), state_->x.get());
    state_->gamma_string = curve.encode(state_->gamma.get());
    output_ = sortition::UnitRandom::from_bytes(gamma_to_hash(state_->gamma_string));
}

Prover::~Prover() = default;
Prover::Prover(Prover&&) noexcept = default;
Prover& Prover::operator=(Prover&&) noexcept = default;

Bytes Prover::proof() const
{
    auto& curve = Curve::instance();
    const BIGNUM* q = curve.order();
    auto h_string = curve.encode(state_->h.get());
    Bn k = nonce_rfc6979(state_->x.get(), h_string);
    Point u = curve.mul(k.get(), nullptr, nullptr);
    Point v = curve.mul(nullptr, state_->h.get(), k.get());
    Bn c = challenge({state_->y.get(), state_->h.get(), state_->gamma.get(), u.get(), v.get()});

    Bn s = new_bn();
    if (BN_mod_mul(s.get(), c.get(), state_->x.get(), q, curve.ctx()) != 1
        || BN_mod_add(s.get(), s.get(), k.get(), q, curve.ctx()) != 1)
        crypto_failure("scalar arithmetic");

    Bytes pi(kProofSize);
    std::memcpy(pi.data(), state_->gamma_string.data(), kPublicKeySize);
    bn_to(c.get(), pi.data() + kPublicKeySize, kChallengeSize);
    bn_to(s.get(), pi.data() + kPublicKeySize + kChallengeSize, kScalarSize);
    return pi;
}

KeyPair keygen(const Seed& seed)
{
    auto& curve = Curve::instance();
    static constexpr char domain[] = "eden/vrf/keygen";
    for (std::uint8_t ctr = 0;; ++ctr) {
        Digest candidate = sha256({as_bytes(domain), seed, ByteView(&ctr, 1)});
        Bn x = bn_from(candidate);
        if (!BN_is_zero(x.get()) && BN_cmp(x.get(), curve.order()) < 0) {
            KeyPair keys;
            keys.secret_key.assign(candidate.begin(), candidate.end());
            keys.public_key = derive_public_key(keys.secret_key);
            return keys;
        }
    }
}

Seed random_seed()
{
    Seed seed{};
    if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1)
        crypto_failure("RAND_bytes");
    return seed;
}

Bytes derive_public_key(ByteView secret_key)
{
    auto& curve = Curve::instance();
    Bn x = parse_secret(secret_key);
    Point y = curve.mul(x.get(), nullptr, nullptr);
    auto enc = curve.encode(y.get());
    return Bytes(enc.begin(), enc.end());
}

Bytes prove(ByteView secret_key, ByteView alpha)
{
    auto& curve = Curve::instance();
    Bn x = parse_secret(secret_key);
    Point y = curve.mul(x.get(), nullptr, nullptr);
    auto pk = curve.encode(y.get());
    Point h = encode_to_curve(pk, alpha);
    auto h_string = curve.encode(h.get());
    Point gamma = curve.mul(nullptr, h.get(), x.get());
    Bn k = nonce_rfc6979(x.get(), h_string);
    Point u = curve.mul(k.get(), nullptr, nullptr);
    Point v = curve.mul(nullptr, h.get(), k.get());
    Bn c = challenge({y.get(), h.get(), gamma.get(), u.get(), v.get()});
    Bn s = new_bn();
    if (BN_mod_mul(s.get(), c.get(), x.get(), curve.order(), curve.ctx()) != 1
        || BN_mod_add(s.get(), s.get(), k.get(), curve.order(), curve.ctx()) != 1)
        crypto_failure("scalar arithmetic");

    Bytes pi(kProofSize);
    auto gamma_string = curve.encode(gamma.get());
    std::memcpy(pi.data(), gamma_string.data(), kPublicKeySize);
    bn_to(c.get(), pi.data() + kPublicKeySize, kChallengeSize);
    bn_to(s.get(), pi.data() + kPublicKeySize + kChallengeSize, kScalarSize);
    return pi;
}

std::optional<Digest> proof_to_hash(ByteView proof)
{
    if (proof.size() != kProofSize || !Curve::instance().decode(proof.first(kPublicKeySize)))
        return std::nullopt;
    std::array<std::uint8_t, kPublicKeySize> gamma{};
    std::memcpy(gamma.data(), proof.data(), kPublicKeySize);
    return gamma_to_hash(gamma);
}

std::optional<Digest> verify_proof(ByteView public_key, ByteView alpha, ByteView proof) noexcept
{
    try {
        auto& curve = Curve::instance();
        auto y = curve.decode_public_key(public_key);
        if (!y)
            return std::nullopt;
        auto decoded = decode_proof(proof);
        if (!decoded)
            return std::nullopt;

        Point h = encode_to_curve(public_key, alpha);
        Bn neg_c = new_bn();
        if (BN_sub(neg_c.get(), curve.order(), decoded->c.get()) != 1)
            return std::nullopt;
        // U = s*B - c*Y, V = s*H - c*Gamma
        Point u = curve.mul(decoded->s.get(), y->get(), neg_c.get());
        Point sh = curve.mul(nullptr, h.get(), decoded->s.get());
        Point cg = curve.mul(nullptr, decoded->gamma.get(), decoded->c.get());
        Point v = curve.sub(sh.get(), cg.get());
        if (EC_POINT_is_at_infinity(curve.group(), u.get()) || EC_POINT_is_at_infinity(curve.group(), v.get()))
            return std::nullopt;
        Bn expected = challenge({y->get(), h.get(), decoded->gamma.get(), u.get(), v.get()});
        if (BN_cmp(expected.get(), decoded->c.get()) != 0)
            return std::nullopt;
        return gamma_to_hash(curve.encode(decoded->gamma.get()));
    } catch (...) {
        return std::nullopt;
    }
}

VrfOutput evaluate(const KeyPair& keys, const MessageHash& input)
{
    Prover prover(keys, input);
    return {prover.output(), prover.proof()};
}

VrfOutput evaluate(ByteView secret_key, const MessageHash& input)
{
    KeyPair keys{Bytes(secret_key.begin(), secret_key.end()), derive_public_key(secret_key)};
    return evaluate(keys, input);
}

bool verify(ByteView public_key, const MessageHash& input, const VrfOutput& out) noexcept
{
    auto beta = verify_proof(public_key, input.digest, out.proof);
    if (!beta)
        return false;
    try {
        return sortition::UnitRandom::from_bytes(*beta) == out.random;
    } catch (...) {
        return false;
    }
}

} // namespace eden::vrf
