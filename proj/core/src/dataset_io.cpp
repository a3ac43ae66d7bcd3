#include "pded/dataset_io.hpp"
#include "pded/error.hpp"
#include "pded/hash.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pded {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

namespace {

std::vector<std::uint8_t> payload_bytes(const Dataset& d) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(d.nx() * d.nt()) * sizeof(double));
  std::size_t off = 0;
  for (Eigen::Index i = 0; i < d.nx(); ++i)
    for (Eigen::Index j = 0; j < d.nt(); ++j) {
      const double v = d.u(i, j);
      std::memcpy(out.data() + off, &v, sizeof v);
      off += sizeof v;
    }
  return out;
}

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <class T>
T get(const std::vector<std::uint8_t>& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw Error(ErrorCode::FormatError, "dataset file is truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

std::filesystem::path metadata_path(const std::filesystem::path& dataset_path) {
  return dataset_path.string() + ".meta.json";
}

std::uint32_t dataset_crc(const Dataset& d) { return crc32(payload_bytes(d)); }

void save_dataset(const Dataset& d, const std::filesystem::path& path, const PdeSpec* spec) {
  const auto payload = payload_bytes(d);
  std::vector<std::uint8_t> buf;
  buf.reserve(payload.size() + 64);
  buf.insert(buf.end(), std::begin(kDatasetMagic), std::end(kDatasetMagic));
  put<std::uint32_t>(buf, kDatasetVersion);
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(d.nx()));
  put<std::uint64_t>(buf, static_cast<std::uint64_t>(d.nt()));
  put(buf, d.x0);
  put(buf, d.x1);
  put(buf, d.t0);
  put(buf, d.t1);
  buf.insert(buf.end(), payload.begin(), payload.end());
  put<std::uint32_t>(buf, crc32(payload));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());

  nlohmann::json meta{
      {"pde", d.name},
      {"nx", d.nx()},
      {"nt", d.nt()},
      {"domain", {{"x0", d.x0}, {"x1", d.x1}, {"t0", d.t0}, {"t1", d.t1}}},
      {"train_frac", d.train_frac},
      {"generator_version", kGeneratorVersion},
  };
  if (spec) {
    meta["pde"] = std::string(to_string(spec->kind));
    meta["parameters"] = spec->parameters;
    meta["boundary"] = spec->boundary;
    meta["periodic"] = spec->periodic;
    meta["nominal_domain"] = {{"x0", spec->x0}, {"x1", spec->x1}, {"t0", spec->t0}, {"t1", spec->t1}};
    meta["initial_condition"] = spec->initial_condition;
    meta["method"] = spec->method;
    meta["solver_tolerances"] = {{"rtol", spec->rtol}, {"atol", spec->atol}};
    meta["ic_seed"] = spec->ic_seed;
    meta["ground_truth"] = {{"skeleton", to_text(spec->ground_truth.skeleton)},
                            {"coefficients", spec->ground_truth.coefficients}};
  }
  std::ofstream side(metadata_path(path), std::ios::trunc);
  if (!side) throw Error(ErrorCode::IoError, "cannot write " + metadata_path(path).string());
  side << meta.dump(2) << '\n';
}

std::optional<DatasetMeta> load_metadata(const std::filesystem::path& dataset_path) {
  std::ifstream in(metadata_path(dataset_path));
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    DatasetMeta m;
    m.pde = j.value("pde", std::string{});
    m.train_frac = j.value("train_frac", 0.8);
    m.ic_seed = j.value("ic_seed", std::uint64_t{0});
    if (j.contains("ground_truth")) {
      const auto& gt = j["ground_truth"];
      m.ground_truth = GroundTruth{parse_equation(gt.at("skeleton").get<std::string>()),
                                   gt.at("coefficients").get<std::vector<double>>()};
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, "bad sidecar " + metadata_path(dataset_path).string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t off = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kDatasetMagic, 4) != 0)
    throw Error(ErrorCode::FormatError, "missing PDED magic");
  off = 4;
  if (get<std::uint32_t>(buf, off) != kDatasetVersion) throw Error(ErrorCode::FormatError, "unsupported version");
  const auto nx = get<std::uint64_t>(buf, off);
  const auto nt = get<std::uint64_t>(buf, off);
  Dataset d;
  d.x0 = get<double>(buf, off);
  d.x1 = get<double>(buf, off);
  d.t0 = get<double>(buf, off);
  d.t1 = get<double>(buf, off);
  if (nx == 0 || nt == 0 || nx > (1u << 24) || nt > (1u << 24)) throw Error(ErrorCode::FormatError, "implausible grid size");
  const std::size_t payload_size = nx * nt * sizeof(double);
  if (buf.size() != off + payload_size + sizeof(std::uint32_t))
    throw Error(ErrorCode::FormatError, "file size does not match the header");
  const std::span<const std::uint8_t> payload(buf.data() + off, payload_size);
  std::size_t crc_off = off + payload_size;
  const auto stored = get<std::uint32_t>(buf, crc_off);
  if (crc32(payload) != stored) throw Error(ErrorCode::ChecksumMismatch, "payload CRC32 mismatch in " + path.string());

  d.u.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nt));
  for (Eigen::Index i = 0; i < d.nx(); ++i)
    for (Eigen::Index j = 0; j < d.nt(); ++j) d.u(i, j) = get<double>(buf, off);

  if (auto meta = load_metadata(path)) {
    d.name = meta->pde;
    d.train_frac = meta->train_frac;
  }
  return d;
}

}  // namespace pded
