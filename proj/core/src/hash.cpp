#include "pded/hash.hpp"
#include "pded/error.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <memory>

namespace pded {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedEquation: return "MalformedEquation";
    case ErrorCode::CoefficientLengthMismatch: return "CoefficientLengthMismatch";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::SingularFactor: return "SingularFactor";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::DegenerateProblem: return "DegenerateProblem";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::BankFormatError: return "BankFormatError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::CheckpointFormatError: return "CheckpointFormatError";
    case ErrorCode::BackendMismatch: return "BackendMismatch";
    case ErrorCode::NoRuns: return "NoRuns";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Sha256Digest sha256(std::string_view bytes) {
  Sha256Digest out{};
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
    throw Error(ErrorCode::IoError, "sha256 digest failed");
  }
  return out;
}

std::string to_hex(const Sha256Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : digest) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace pded
