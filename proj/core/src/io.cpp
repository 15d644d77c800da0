#include "tensor_lift/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace tensor_lift::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw IoError("unexpected end of file");
  return value;
}

void put_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

void expect_magic(std::istream& is, const char (&magic)[5]) {
  std::array<char, 4> got{};
  if (!is.read(got.data(), 4)) throw IoError("unexpected end of file reading magic");
  if (std::memcmp(got.data(), magic, 4) != 0) {
    throw IoError(std::string("bad magic, expected ") + magic);
  }
}

void put_shape(std::ostream& os, const Shape& shape) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put<std::uint64_t>(os, d);
}

Shape get_shape(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n == 0 || n > 64) throw IoError("implausible tensor order " + std::to_string(n));
  Shape shape(n);
  for (auto& d : shape) {
    d = get<std::uint64_t>(is);
    if (d == 0) throw IoError("zero extent in stored shape");
  }
  return shape;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

void finish(std::ostream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

DenseTensor matrix_tensor(const Matrix& m) { return DenseTensor::from_matrix(m); }

Matrix tensor_matrix(const DenseTensor& t, const char* what) {
  if (t.order() != 2) throw IoError(std::string(what) + " must be stored as a matrix");
  return t.to_matrix();
}

}  // namespace

void write_tensor(std::ostream& os, const DenseTensor& t) {
  put_magic(os, "DTF1");
  put_shape(os, t.shape());
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

DenseTensor read_tensor(std::istream& is) {
  expect_magic(is, "DTF1");
  Shape shape = get_shape(is);
  std::vector<double> data(element_count(shape));
  if (!is.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    throw IoError("truncated DTF1 payload");
  }
  return DenseTensor(std::move(shape), std::move(data));
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  auto os = open_out(path);
  write_tensor(os, t);
  finish(os, path);
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_tensor(is);
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_tensor(path, matrix_tensor(m));
}

Matrix read_matrix(const std::filesystem::path& path) {
  return tensor_matrix(read_tensor(path), path.string().c_str());
}

void write_mask(std::ostream& os, const ObservationMask& mask) {
  put_magic(os, "MSK1");
  put_shape(os, mask.shape());
  put<std::uint64_t>(os, mask.count());
  os.write(reinterpret_cast<const char*>(mask.indices().data()),
           static_cast<std::streamsize>(mask.count() * sizeof(std::uint64_t)));
}

ObservationMask read_mask(std::istream& is) {
  expect_magic(is, "MSK1");
  Shape shape = get_shape(is);
  const auto count = get<std::uint64_t>(is);
  if (count > element_count(shape)) throw IoError("MSK1 count exceeds tensor size");
  std::vector<std::uint64_t> idx(count);
  if (!is.read(reinterpret_cast<char*>(idx.data()),
               static_cast<std::streamsize>(count * sizeof(std::uint64_t)))) {
    throw IoError("truncated MSK1 payload");
  }
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (idx[i] <= idx[i - 1]) throw IoError("MSK1 indices must be strictly ascending");
  }
  try {
    return ObservationMask(std::move(shape), std::move(idx));
  } catch (const DimensionError& e) {
    throw IoError(std::string("invalid MSK1: ") + e.what());
  }
}

void write_mask(const std::filesystem::path& path, const ObservationMask& mask) {
  auto os = open_out(path);
  write_mask(os, mask);
  finish(os, path);
}

ObservationMask read_mask(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_mask(is);
}

void write_model(std::ostream& os, const Model& model) {
  put_magic(os, "MDL1");
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.index()));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        m.validate();
        Shape ranks;
        if constexpr (std::is_same_v<T, CPModel>) {
          ranks = {m.rank()};
        } else {
          ranks = m.ranks();
        }
        put<std::uint32_t>(os, static_cast<std::uint32_t>(m.shape().size()));
        put<std::uint32_t>(os, static_cast<std::uint32_t>(ranks.size()));
        for (auto r : ranks) put<std::uint64_t>(os, r);
        if constexpr (std::is_same_v<T, CPModel>) {
          write_tensor(os, DenseTensor({m.rank()}, std::vector<double>(m.weights.data(),
                                                                       m.weights.data() + m.weights.size())));
          for (const auto& f : m.factors) write_tensor(os, matrix_tensor(f));
        } else if constexpr (std::is_same_v<T, TuckerModel>) {
          write_tensor(os, m.core);
          for (const auto& f : m.factors) write_tensor(os, matrix_tensor(f));
        } else {
          for (const auto& c : m.cores) write_tensor(os, c);
        }
      },
      model);
}

Model read_model(std::istream& is) {
  expect_magic(is, "MDL1");
  const auto kind = get<std::uint32_t>(is);
  const auto order = get<std::uint32_t>(is);
  const auto nranks = get<std::uint32_t>(is);
  if (order == 0 || order > 64 || nranks > 64) throw IoError("implausible MDL1 header");
  Shape ranks(nranks);
  for (auto& r : ranks) r = get<std::uint64_t>(is);
  try {
    switch (kind) {
      case 0: {
        CPModel m;
        const DenseTensor w = read_tensor(is);
        m.weights = vectorize(w);
        for (std::uint32_t n = 0; n < order; ++n) m.factors.push_back(tensor_matrix(read_tensor(is), "CP factor"));
        m.validate();
        if (ranks != Shape{m.rank()}) throw IoError("MDL1 rank metadata disagrees with payload");
        return m;
      }
      case 1: {
        TuckerModel m;
        m.core = read_tensor(is);
        for (std::uint32_t n = 0; n < order; ++n) m.factors.push_back(tensor_matrix(read_tensor(is), "Tucker factor"));
        m.validate();
        if (ranks != m.ranks()) throw IoError("MDL1 rank metadata disagrees with payload");
        return m;
      }
      case 2: {
        TTModel m;
        for (std::uint32_t n = 0; n < order; ++n) m.cores.push_back(read_tensor(is));
        m.validate();
        if (ranks != m.ranks()) throw IoError("MDL1 rank metadata disagrees with payload");
        return m;
      }
      default:
        throw IoError("unknown MDL1 model kind " + std::to_string(kind));
    }
  } catch (const DimensionError& e) {
    throw IoError(std::string("inconsistent MDL1 payload: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const Model& model) {
  auto os = open_out(path);
  write_model(os, model);
  finish(os, path);
}

Model read_model(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_model(is);
}

}  // namespace tensor_lift::io
