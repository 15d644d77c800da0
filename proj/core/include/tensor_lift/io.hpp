#pragma once

#include "tensor_lift/mask.hpp"
#include "tensor_lift/models.hpp"

#include <filesystem>
#include <iosfwd>

namespace tensor_lift::io {

// All containers are little-endian.
//
// DTF1: "DTF1" | u32 N | u64 dims[N] | f64 data[prod dims]   (row-major)
// MSK1: "MSK1" | u32 N | u64 dims[N] | u64 count | u64 linear[count] (ascending)
// MDL1: "MDL1" | u32 kind (0 cp, 1 tucker, 2 tt) | u32 N | u32 nranks |
//       u64 ranks[nranks] | payload tensors, each a complete DTF1 record:
//         cp:     weights (R), factors A^(1..N) (I_n x R)
//         tucker: core, factors A^(1..N) (I_n x R_n)
//         tt:     cores (R_{n-1} x I_n x R_n)

void write_tensor(std::ostream& os, const DenseTensor& t);
DenseTensor read_tensor(std::istream& is);
void write_tensor(const std::filesystem::path& path, const DenseTensor& t);
DenseTensor read_tensor(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

void write_mask(std::ostream& os, const ObservationMask& mask);
ObservationMask read_mask(std::istream& is);
void write_mask(const std::filesystem::path& path, const ObservationMask& mask);
ObservationMask read_mask(const std::filesystem::path& path);

void write_model(std::ostream& os, const Model& model);
Model read_model(std::istream& is);
void write_model(const std::filesystem::path& path, const Model& model);
Model read_model(const std::filesystem::path& path);

}  // namespace tensor_lift::io
