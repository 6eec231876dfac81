// SPDX-License-Identifier: Apache-2.0
#include "alignrank/digest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

namespace alignrank {

struct Sha256::Ctx {
    EVP_MD_CTX* md = nullptr;
};

Sha256::Sha256() : ctx_(std::make_unique<Ctx>()) {
    ctx_->md = EVP_MD_CTX_new();
    if (ctx_->md == nullptr || EVP_DigestInit_ex(ctx_->md, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: EVP initialisation failed");
    }
}

Sha256::~Sha256() { EVP_MD_CTX_free(ctx_->md); }

Sha256& Sha256::update(std::string_view bytes) {
    if (EVP_DigestUpdate(ctx_->md, bytes.data(), bytes.size()) != 1) {
        throw std::runtime_error("sha256: update failed");
    }
    return *this;
}

Sha256& Sha256::update_field(std::string_view bytes) {
    std::array<char, 8> len{};
    auto n = static_cast<std::uint64_t>(bytes.size());
    for (std::size_t i = 0; i < len.size(); ++i) {
        len[i] = static_cast<char>((n >> (8 * i)) & 0xffU);
    }
    update(std::string_view(len.data(), len.size()));
    return update(bytes);
}

Sha256Digest Sha256::finish() {
    Sha256Digest out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_->md, out.data(), &len) != 1 || len != out.size()) {
        throw std::runtime_error("sha256: finalisation failed");
    }
    return out;
}

Sha256Digest sha256(std::string_view bytes) { return Sha256().update(bytes).finish(); }

std::string to_hex(const Sha256Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (auto b : digest) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0x0f]);
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) { return to_hex(sha256(bytes)); }

std::string sha256_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
    }
    return to_hex(h.finish());
}

}  // namespace alignrank
