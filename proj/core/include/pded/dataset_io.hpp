#pragma once

#include "pded/numerics.hpp"
#include "pded/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pded {

inline constexpr char kDatasetMagic[4] = {'P', 'D', 'E', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::string_view kGeneratorVersion = "pded-solver/1";

/// Sidecar contents used at run time; the file carries more (parameters,
/// boundary conditions, tolerances) for auditing.
struct DatasetMeta {
  std::string pde;
  double train_frac = 0.8;
  std::uint64_t ic_seed = 0;
  std::optional<GroundTruth> ground_truth;
};

/// Layout (little endian): "PDED", u32 version, u64 nx, u64 nt, f64 x0 x1 t0
/// t1, nx*nt f64 with u[i*nt + j] = u(x_i, t_j), u32 CRC32 of the payload.
/// Writes <path>.meta.json next to it.
void save_dataset(const Dataset& d, const std::filesystem::path& path, const PdeSpec* spec = nullptr);

/// Throws IoError, FormatError or ChecksumMismatch. Name and train_frac come
/// from the sidecar when present.
Dataset load_dataset(const std::filesystem::path& path);

std::optional<DatasetMeta> load_metadata(const std::filesystem::path& dataset_path);
std::filesystem::path metadata_path(const std::filesystem::path& dataset_path);

/// CRC32 of the payload bytes, identical to the value stored in the file.
std::uint32_t dataset_crc(const Dataset& d);

}  // namespace pded
