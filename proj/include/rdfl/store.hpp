#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "rdfl/bytes.hpp"
#include "rdfl/crypto.hpp"
#include "rdfl/error.hpp"
#include "rdfl/netsim.hpp"
#include "rdfl/random.hpp"

namespace rdfl {

namespace base58 {

inline constexpr std::string_view kAlphabet = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

inline std::string encode(ByteView input) {
  const auto zeros = static_cast<std::size_t>(
      std::find_if(input.begin(), input.end(), [](std::uint8_t b) { return b != 0; }) - input.begin());
  // log(256) / log(58) < 1.38
  std::vector<std::uint8_t> digits((input.size() - zeros) * 138 / 100 + 1, 0);
  std::size_t used = 0;
  for (std::size_t i = zeros; i < input.size(); ++i) {
    int carry = input[i];
    std::size_t k = 0;
    for (auto it = digits.rbegin(); (carry != 0 || k < used) && it != digits.rend(); ++it, ++k) {
      carry += 256 * (*it);
      *it = static_cast<std::uint8_t>(carry % 58);
      carry /= 58;
    }
    used = k;
  }
  auto it = std::find_if(digits.begin(), digits.end(), [](std::uint8_t d) { return d != 0; });
  std::string out(zeros, '1');
  for (; it != digits.end(); ++it) out.push_back(kAlphabet[*it]);
  return out;
}

inline std::optional<Bytes> decode(std::string_view text) {
  const auto zeros = static_cast<std::size_t>(
      std::find_if(text.begin(), text.end(), [](char c) { return c != '1'; }) - text.begin());
  // log(58) / log(256) < 0.733
  std::vector<std::uint8_t> bytes((text.size() - zeros) * 733 / 1000 + 1, 0);
  std::size_t used = 0;
  for (std::size_t i = zeros; i < text.size(); ++i) {
    const auto pos = kAlphabet.find(text[i]);
    if (pos == std::string_view::npos) return std::nullopt;
    int carry = static_cast<int>(pos);
    std::size_t k = 0;
    for (auto it = bytes.rbegin(); (carry != 0 || k < used) && it != bytes.rend(); ++it, ++k) {
      carry += 58 * (*it);
      *it = static_cast<std::uint8_t>(carry % 256);
      carry /= 256;
    }
    used = k;
  }
  auto it = std::find_if(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b != 0; });
  Bytes out(zeros, 0);
  out.insert(out.end(), it, bytes.end());
  return out;
}

}  // namespace base58

inline constexpr std::size_t kContentIdChars = 46;
inline constexpr std::uint8_t kMultihashSha256 = 0x12;
inline constexpr std::uint8_t kMultihashSha256Len = 0x20;

/// base58btc(0x12 0x20 || sha256(content)): the 46-character multihash form.
class ContentId {
 public:
  static ContentId of(ByteView content) {
    const auto digest = crypto::sha256(content);
    Bytes mh{kMultihashSha256, kMultihashSha256Len};
    mh.insert(mh.end(), digest.begin(), digest.end());
    return ContentId(base58::encode(mh));
  }

  /// Validates length, alphabet and multihash prefix.
  static ContentId parse(std::string_view text) {
    require(text.size() == kContentIdChars, ErrorCode::DecodeError, "content id must be 46 characters");
    const auto raw = base58::decode(text);
    require(raw && raw->size() == 34 && (*raw)[0] == kMultihashSha256 && (*raw)[1] == kMultihashSha256Len,
            ErrorCode::DecodeError, "content id is not a sha2-256 multihash");
    return ContentId(std::string(text));
  }

  const std::string& str() const { return text_; }

  friend auto operator<=>(const ContentId&, const ContentId&) = default;

 private:
  explicit ContentId(std::string text) : text_(std::move(text)) {}

  std::string text_;
};

/// In-process content-addressed blob store. Reads run concurrently; writes are serialized.
class ContentStore {
 public:
  ContentId put(ByteView blob) {
    auto id = ContentId::of(blob);
    std::unique_lock lock(mutex_);
    blobs_.try_emplace(id.str(), blob.begin(), blob.end());
    return id;
  }

  /// Verifies the content hash on every read.
  Bytes get(const ContentId& id) const {
    std::shared_lock lock(mutex_);
    auto it = blobs_.find(id.str());
    if (it == blobs_.end()) fail(ErrorCode::NotFound, "content " + id.str() + " not stored");
    require(ContentId::of(it->second) == id, ErrorCode::CorruptionError, "content " + id.str() + " fails its digest");
    return it->second;
  }

  bool contains(const ContentId& id) const {
    std::shared_lock lock(mutex_);
    return blobs_.count(id.str()) == 1;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return blobs_.size();
  }

  /// Fault injection: flips one bit of a stored blob in place.
  void inject_bit_flip(const ContentId& id, std::size_t bit) {
    std::unique_lock lock(mutex_);
    auto& blob = blobs_.at(id.str());
    require(bit < blob.size() * 8, ErrorCode::InvalidArgument, "bit index outside blob");
    blob[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Bytes> blobs_;
};

/// Direct provider-to-receiver traffic of one share: wrapped content key
/// plus the content id sealed under that key.
struct Envelope {
  Bytes encrypted_key;
  Bytes encrypted_cid;
  std::string sender;
  std::string receiver;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Length-prefixed (u32 LE) fields: sender, receiver, encrypted_key, encrypted_cid.
inline Bytes serialize(const Envelope& e) {
  ByteWriter w;
  w.prefixed(e.sender);
  w.prefixed(e.receiver);
  w.prefixed(e.encrypted_key);
  w.prefixed(e.encrypted_cid);
  return std::move(w).take();
}

inline Envelope deserialize_envelope(ByteView bytes) {
  ByteReader r(bytes);
  Envelope e;
  e.sender = r.prefixed_string();
  e.receiver = r.prefixed_string();
  e.encrypted_key = r.prefixed_bytes();
  e.encrypted_cid = r.prefixed_bytes();
  require(r.remaining() == 0, ErrorCode::DecodeError, "trailing bytes after envelope");
  return e;
}

/// The sender and receiver ids are bound to the sealed content id as associated data.
inline Bytes envelope_aad(std::string_view sender, std::string_view receiver) {
  ByteWriter w;
  w.prefixed(sender);
  w.prefixed(receiver);
  return std::move(w).take();
}

struct ShareOptions {
  /// Test-vector mode: derive content key and nonce from this seed instead of the OS RNG.
  std::optional<std::uint64_t> deterministic_seed;
  CommLedger* ledger = nullptr;
  std::uint64_t time = 0;
};

namespace detail {

inline void fill_from_seed(std::span<std::uint8_t> out, std::uint64_t seed, std::string_view label) {
  Rng rng(derive_seed(seed, label));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64());
}

}  // namespace detail

/// Provider side: fresh content key, store the blob, wrap the key for the
/// receiver, seal the content id under the key.
inline Envelope share(const std::string& provider, ByteView blob, const std::string& receiver,
                      const crypto::PublicKey& receiver_key, ContentStore& store, const ShareOptions& options = {}) {
  crypto::SymmetricKey key;
  crypto::Nonce nonce{};
  if (options.deterministic_seed) {
    detail::fill_from_seed(key.bytes, *options.deterministic_seed, "content-key");
    detail::fill_from_seed(nonce, *options.deterministic_seed, "nonce");
  } else {
    key = crypto::SymmetricKey::generate();
    const auto r = crypto::random_bytes(nonce.size());
    std::copy(r.begin(), r.end(), nonce.begin());
  }
  const auto cid = store.put(blob);

  Envelope e;
  e.sender = provider;
  e.receiver = receiver;
  e.encrypted_key = crypto::wrap_key(receiver_key, key);
  e.encrypted_cid = crypto::seal(key, nonce, as_bytes(cid.str()), envelope_aad(provider, receiver));
  if (options.ledger) {
    options.ledger->record({provider, receiver, PayloadKind::EnvelopeBytes, serialize(e).size(), options.time});
  }
  return e;
}

/// Receiver side: unwrap the key, open the content id, fetch the blob.
inline Bytes receive(const Envelope& envelope, const crypto::KeyPair& receiver_keys, const ContentStore& store) {
  const auto key = crypto::unwrap_key(receiver_keys, envelope.encrypted_key);
  const auto cid_bytes =
      crypto::open(key, envelope.encrypted_cid, envelope_aad(envelope.sender, envelope.receiver));
  const std::string_view cid_text(reinterpret_cast<const char*>(cid_bytes.data()), cid_bytes.size());
  return store.get(ContentId::parse(cid_text));
}

}  // namespace rdfl
