#pragma once

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <array>
#include <memory>
#include <string>

#include "rdfl/bytes.hpp"

namespace rdfl::crypto {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    fail(ErrorCode::CryptoError, "SHA-256 failed");
  }
  return out;
}

inline Digest sha256(std::string_view text) { return sha256(as_bytes(text)); }

namespace detail {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
struct PkeyDeleter {
  void operator()(EVP_PKEY* key) const { EVP_PKEY_free(key); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* ctx) const { EVP_PKEY_CTX_free(ctx); }
};
struct BioDeleter {
  void operator()(BIO* bio) const { BIO_free(bio); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using Bio = std::unique_ptr<BIO, BioDeleter>;

inline void check(bool ok, const char* what) {
  if (!ok) {
    ERR_clear_error();
    fail(ErrorCode::CryptoError, what);
  }
}

}  // namespace detail

using Pkey = std::shared_ptr<EVP_PKEY>;

inline Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  detail::check(RAND_bytes(out.data(), static_cast<int>(n)) == 1, "RAND_bytes failed");
  return out;
}

// ---------------------------------------------------------------------------
// Authenticated symmetric encryption: AES-256-GCM.
// Sealed layout: nonce(12) || ciphertext || tag(16).

constexpr std::size_t kSymmetricKeyBytes = 32;
constexpr std::size_t kNonceBytes = 12;
constexpr std::size_t kTagBytes = 16;

struct SymmetricKey {
  std::array<std::uint8_t, kSymmetricKeyBytes> bytes{};

  static SymmetricKey generate() {
    SymmetricKey key;
    detail::check(RAND_bytes(key.bytes.data(), static_cast<int>(key.bytes.size())) == 1, "RAND_bytes failed");
    return key;
  }

  friend bool operator==(const SymmetricKey&, const SymmetricKey&) = default;
};

using Nonce = std::array<std::uint8_t, kNonceBytes>;

inline Bytes seal(const SymmetricKey& key, const Nonce& nonce, ByteView plaintext, ByteView aad) {
  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  detail::check(ctx != nullptr, "cipher context allocation failed");
  detail::check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1, "GCM init failed");
  detail::check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1, "GCM ivlen failed");
  detail::check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), nonce.data()) == 1,
                "GCM key setup failed");

  Bytes out(kNonceBytes + plaintext.size() + kTagBytes);
  std::copy(nonce.begin(), nonce.end(), out.begin());
  int len = 0;
  if (!aad.empty()) {
    detail::check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1,
                  "GCM aad failed");
  }
  detail::check(EVP_EncryptUpdate(ctx.get(), out.data() + kNonceBytes, &len, plaintext.data(),
                                  static_cast<int>(plaintext.size())) == 1,
                "GCM encrypt failed");
  int tail = 0;
  detail::check(EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceBytes + len, &tail) == 1, "GCM final failed");
  detail::check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagBytes,
                                    out.data() + kNonceBytes + plaintext.size()) == 1,
                "GCM tag failed");
  return out;
}

/// Throws authentication-error when the tag does not verify.
inline Bytes open(const SymmetricKey& key, ByteView sealed, ByteView aad) {
  require(sealed.size() >= kNonceBytes + kTagBytes, ErrorCode::AuthenticationError, "sealed payload too short");
  const std::size_t body = sealed.size() - kNonceBytes - kTagBytes;

  detail::CipherCtx ctx(EVP_CIPHER_CTX_new());
  detail::check(ctx != nullptr, "cipher context allocation failed");
  detail::check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) == 1, "GCM init failed");
  detail::check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceBytes, nullptr) == 1, "GCM ivlen failed");
  detail::check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.bytes.data(), sealed.data()) == 1,
                "GCM key setup failed");

  Bytes plain(body);
  int len = 0;
  if (!aad.empty()) {
    detail::check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1,
                  "GCM aad failed");
  }
  detail::check(EVP_DecryptUpdate(ctx.get(), plain.data(), &len, sealed.data() + kNonceBytes,
                                  static_cast<int>(body)) == 1,
                "GCM decrypt failed");
  Bytes tag(sealed.end() - kTagBytes, sealed.end());
  detail::check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagBytes, tag.data()) == 1, "GCM tag failed");
  int tail = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), plain.data() + len, &tail) != 1) {
    ERR_clear_error();
    fail(ErrorCode::AuthenticationError, "authentication tag mismatch");
  }
  return plain;
}

// ---------------------------------------------------------------------------
// Asymmetric key wrapping: RSA-OAEP (SHA-256).

constexpr int kRsaBits = 2048;

class PublicKey {
 public:
  explicit PublicKey(Pkey key) : key_(std::move(key)) {}

  EVP_PKEY* get() const { return key_.get(); }

  std::string to_pem() const {
    detail::Bio bio(BIO_new(BIO_s_mem()));
    detail::check(bio && PEM_write_bio_PUBKEY(bio.get(), key_.get()) == 1, "PEM export failed");
    char* data = nullptr;
    const long n = BIO_get_mem_data(bio.get(), &data);
    return {data, static_cast<std::size_t>(n)};
  }

 private:
  Pkey key_;
};

class KeyPair {
 public:
  static KeyPair generate(int bits = kRsaBits) {
    detail::PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_RSA, nullptr));
    detail::check(ctx != nullptr, "RSA context allocation failed");
    detail::check(EVP_PKEY_keygen_init(ctx.get()) == 1, "RSA keygen init failed");
    detail::check(EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), bits) == 1, "RSA keygen bits failed");
    EVP_PKEY* raw = nullptr;
    detail::check(EVP_PKEY_keygen(ctx.get(), &raw) == 1, "RSA keygen failed");
    return KeyPair(Pkey(raw, detail::PkeyDeleter{}));
  }

  PublicKey public_key() const { return PublicKey(key_); }

  EVP_PKEY* get() const { return key_.get(); }

 private:
  explicit KeyPair(Pkey key) : key_(std::move(key)) {}

  Pkey key_;
};

namespace detail {

inline PkeyCtx oaep_ctx(EVP_PKEY* key, bool encrypt) {
  PkeyCtx ctx(EVP_PKEY_CTX_new(key, nullptr));
  check(ctx != nullptr, "RSA context allocation failed");
  check((encrypt ? EVP_PKEY_encrypt_init(ctx.get()) : EVP_PKEY_decrypt_init(ctx.get())) == 1, "RSA init failed");
  check(EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) == 1, "OAEP padding failed");
  check(EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha256()) == 1, "OAEP digest failed");
  check(EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha256()) == 1, "MGF1 digest failed");
  return ctx;
}

}  // namespace detail

inline Bytes wrap_key(const PublicKey& receiver, const SymmetricKey& key) {
  require(receiver.get() != nullptr, ErrorCode::CryptoError, "missing public key");
  auto ctx = detail::oaep_ctx(receiver.get(), true);
  std::size_t len = 0;
  detail::check(EVP_PKEY_encrypt(ctx.get(), nullptr, &len, key.bytes.data(), key.bytes.size()) == 1,
                "RSA encrypt sizing failed");
  Bytes out(len);
  detail::check(EVP_PKEY_encrypt(ctx.get(), out.data(), &len, key.bytes.data(), key.bytes.size()) == 1,
                "RSA encrypt failed");
  out.resize(len);
  return out;
}

/// Throws crypto-error when the wrapped key was not produced for `receiver`.
inline SymmetricKey unwrap_key(const KeyPair& receiver, ByteView wrapped) {
  auto ctx = detail::oaep_ctx(receiver.get(), false);
  std::size_t len = 0;
  detail::check(EVP_PKEY_decrypt(ctx.get(), nullptr, &len, wrapped.data(), wrapped.size()) == 1,
                "RSA decrypt sizing failed");
  Bytes out(len);
  if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, wrapped.data(), wrapped.size()) != 1 ||
      len != kSymmetricKeyBytes) {
    ERR_clear_error();
    fail(ErrorCode::CryptoError, "key unwrap failed");
  }
  SymmetricKey key;
  std::copy_n(out.begin(), kSymmetricKeyBytes, key.bytes.begin());
  return key;
}

}  // namespace rdfl::crypto
