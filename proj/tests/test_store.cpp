#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "rdfl/store.hpp"
#include "support.hpp"

namespace rdfl {
namespace {

Bytes blob_of(std::string_view s) {
  auto v = as_bytes(s);
  return Bytes(v.begin(), v.end());
}

TEST(Base58, RoundTripAndLeadingZeros) {
  EXPECT_EQ(base58::encode(Bytes{}), "");
  EXPECT_EQ(base58::encode(Bytes{0, 0, 1}), "112");
  EXPECT_EQ(base58::encode(blob_of("hello world")), "StV1DL6CwTryKyV");
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    Bytes b(rng.below(40));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(i % 3 == 0 ? 2 : 256));
    auto back = base58::decode(base58::encode(b));
    ASSERT_TRUE(back.has_value());
    ASSERT_EQ(*back, b);
  }
  EXPECT_FALSE(base58::decode("0OIl").has_value());
}

// Golden ids from tests/oracles/hash_oracle.py.
TEST(ContentId, GoldenValues) {
  EXPECT_EQ(ContentId::of(Bytes{}).str(), "QmdfTbBqBPQ7VNxZEYEj14VmRuZBkqFbiwReogJgS1zR1n");
  EXPECT_EQ(ContentId::of(blob_of("hello")).str(), "QmRN6wdp1S2A5EtjW9A3M1vKSBuQQGcgvuhoMUoEz4iiT5");
}

TEST(ContentId, ParseValidates) {
  const auto id = ContentId::of(blob_of("x"));
  EXPECT_EQ(ContentId::parse(id.str()), id);
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, ContentId::parse("Qm"));
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, ContentId::parse(std::string(46, '1')));
  EXPECT_RDFL_ERROR(ErrorCode::DecodeError, ContentId::parse(std::string(46, '0')));
}

TEST(ContentStore, PutIsDeterministicAndIdempotent) {
  ContentStore store;
  const auto a = store.put(blob_of("same"));
  const auto b = store.put(blob_of("same"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(store.size(), 1u);
}

TEST(ContentStore, TenThousandBlobsRoundTrip) {
  ContentStore store;
  Rng rng(17);
  std::vector<std::pair<ContentId, Bytes>> kept;
  std::set<std::string> ids;
  for (int i = 0; i < 10'000; ++i) {
    Bytes b(1 + rng.below(64));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.next_u64());
    b.push_back(static_cast<std::uint8_t>(i));
    b.push_back(static_cast<std::uint8_t>(i >> 8));
    auto id = store.put(b);
    ASSERT_EQ(id.str().size(), kContentIdChars);
    ids.insert(id.str());
    kept.emplace_back(id, std::move(b));
  }
  EXPECT_EQ(ids.size(), 10'000u);
  for (const auto& [id, b] : kept) ASSERT_EQ(store.get(id), b);
}

TEST(ContentStore, ConcurrentReaders) {
  ContentStore store;
  const auto id = store.put(blob_of("shared"));
  std::vector<std::thread> readers;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    readers.emplace_back([&] {
      for (int k = 0; k < 200; ++k) ok += store.get(id) == blob_of("shared");
    });
  }
  for (auto& t : readers) t.join();
  EXPECT_EQ(ok.load(), 1600);
}

TEST(ContentStore, NotFoundAndCorruption) {
  ContentStore store;
  EXPECT_RDFL_ERROR(ErrorCode::NotFound, store.get(ContentId::of(blob_of("absent"))));
  const auto id = store.put(blob_of("payload"));
  store.inject_bit_flip(id, 13);
  EXPECT_RDFL_ERROR(ErrorCode::CorruptionError, store.get(id));
}

class Sharing : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    receiver_ = new crypto::KeyPair(crypto::KeyPair::generate());
    stranger_ = new crypto::KeyPair(crypto::KeyPair::generate());
  }
  static void TearDownTestSuite() {
    delete receiver_;
    delete stranger_;
  }
  static crypto::KeyPair* receiver_;
  static crypto::KeyPair* stranger_;
};

crypto::KeyPair* Sharing::receiver_ = nullptr;
crypto::KeyPair* Sharing::stranger_ = nullptr;

TEST_F(Sharing, RoundTrip) {
  ContentStore store;
  const auto blob = blob_of("discriminator and generator parameters");
  CommLedger ledger;
  auto env = share("DP_1", blob, "DP_4", receiver_->public_key(), store, {std::nullopt, &ledger, 3});
  EXPECT_EQ(receive(env, *receiver_, store), blob);
  EXPECT_EQ(deserialize_envelope(serialize(env)), env);
  ASSERT_EQ(ledger.messages().size(), 1u);
  EXPECT_EQ(ledger.messages()[0].kind, PayloadKind::EnvelopeBytes);
  EXPECT_EQ(ledger.messages()[0].bytes, serialize(env).size());
}

TEST_F(Sharing, EnvelopeFieldSizes) {
  ContentStore store;
  auto env = share("a", blob_of("x"), "b", receiver_->public_key(), store);
  EXPECT_EQ(env.encrypted_key.size(), 256u);
  EXPECT_EQ(env.encrypted_cid.size(), crypto::kNonceBytes + kContentIdChars + crypto::kTagBytes);
  EXPECT_EQ(env.encrypted_cid.size(), 74u);
}

TEST_F(Sharing, WrongPrivateKeyIsCryptoError) {
  ContentStore store;
  auto env = share("DP_1", blob_of("secret"), "DP_4", receiver_->public_key(), store);
  EXPECT_RDFL_ERROR(ErrorCode::CryptoError, receive(env, *stranger_, store));
}

TEST_F(Sharing, EveryTamperedBitIsDetected) {
  ContentStore store;
  auto env = share("DP_1", blob_of("secret"), "DP_4", receiver_->public_key(), store);
  for (std::size_t bit = 0; bit < env.encrypted_cid.size() * 8; ++bit) {
    auto bad = env;
    bad.encrypted_cid[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    ASSERT_EQ(testing::error_code_of([&] { receive(bad, *receiver_, store); }), ErrorCode::AuthenticationError)
        << "bit " << bit;
  }
  auto rerouted = env;
  rerouted.sender = "DP_2";
  EXPECT_RDFL_ERROR(ErrorCode::AuthenticationError, receive(rerouted, *receiver_, store));
}

TEST_F(Sharing, MissingContentIsNotFound) {
  ContentStore provider_store, empty_store;
  auto env = share("DP_1", blob_of("secret"), "DP_4", receiver_->public_key(), provider_store);
  EXPECT_RDFL_ERROR(ErrorCode::NotFound, receive(env, *receiver_, empty_store));
}

// Sealed id from tests/oracles/envelope_oracle.py (pure-Python MT19937-64 + cryptography AES-GCM).
TEST_F(Sharing, DeterministicModeGolden) {
  ContentStore store;
  ShareOptions opts;
  opts.deterministic_seed = 2024;
  auto env = share("DP_1", blob_of("model-bytes"), "DP_4", receiver_->public_key(), store, opts);
  EXPECT_EQ(to_hex(env.encrypted_cid),
            "771055225a6fb4ae4ebfa48479b317e420b650384d0ad5dff41cd680929de18cc075ef3a279a77e157cfb261d33dfd4a1624b501"
            "adf13bb2fb43ae50ad391e86757dda97a6d9a7c70045");
  EXPECT_EQ(receive(env, *receiver_, store), blob_of("model-bytes"));
}

TEST_F(Sharing, EnvelopeTrafficIsSmallAgainstModel) {
  ContentStore store;
  Bytes model(1'000'000);
  Rng rng(1);
  for (auto& b : model) b = static_cast<std::uint8_t>(rng.next_u64());
  CommLedger ledger;
  share("DP_1", model, "DP_4", receiver_->public_key(), store, {std::nullopt, &ledger, 0});
  EXPECT_LT(ledger.total_bytes() * 100, model.size());
}

}  // namespace
}  // namespace rdfl
