#include "clreg/cli/embedding_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "clreg/error.hpp"

namespace clreg::cli {
namespace {

constexpr std::array<char, 4> kMagic{'C', 'L', 'R', 'G'};

std::uint32_t load_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::uint32_t v, unsigned char* p) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void read_exact(std::istream& in, unsigned char* dst, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ValidationError(std::string("embedding file truncated in ") + what);
  }
}

std::uint32_t checked_u32(Eigen::Index n, const char* what) {
  if (n < 0 || static_cast<std::uint64_t>(n) > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError(std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(n);
}

float to_storage(double x) {
  const float f = static_cast<float>(x);
  if (!std::isfinite(f)) {
    throw ValidationError("embedding value is not representable as a finite f32");
  }
  return f;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

EmbeddingFormat parse_embedding_format(std::string_view s) {
  if (s == "csv") return EmbeddingFormat::kCsv;
  if (s == "bin") return EmbeddingFormat::kBinary;
  throw ValidationError("unknown embedding format '" + std::string(s) + "' (csv or bin)");
}

std::string_view to_string(EmbeddingFormat f) {
  return f == EmbeddingFormat::kCsv ? "csv" : "bin";
}

Eigen::MatrixXd read_embeddings_csv(std::istream& in) {
  std::vector<float> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::size_t count = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      float v = 0.0f;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" +
                              std::string(field) + "' as a number");
      }
      if (!std::isfinite(v)) {
        throw ValidationError("line " + std::to_string(line_no) + ": non-finite value");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      dim = count;
    } else if (count != dim) {
      throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(count) +
                            " values, expected " + std::to_string(dim));
    }
    ++rows;
  }
  if (rows == 0) throw ValidationError("embedding file has no rows");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * dim + j];
    }
  }
  return out;
}

Eigen::MatrixXd read_embeddings_binary(std::istream& in) {
  std::array<unsigned char, 16> header{};
  read_exact(in, header.data(), header.size(), "header");
  if (!std::equal(kMagic.begin(), kMagic.end(), header.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw ValidationError("not a CLRG embedding file (bad magic)");
  }
  const std::uint32_t version = load_u32(header.data() + 4);
  if (version != kEmbeddingFormatVersion) {
    throw ValidationError("unsupported embedding file version " + std::to_string(version));
  }
  const std::uint32_t rows = load_u32(header.data() + 8);
  const std::uint32_t dim = load_u32(header.data() + 12);
  if (rows == 0 || dim == 0) throw ValidationError("embedding file declares an empty matrix");

  const std::uint64_t count = static_cast<std::uint64_t>(rows) * dim;
  std::vector<unsigned char> payload(count * 4);
  read_exact(in, payload.data(), payload.size(), "payload");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("embedding file has trailing bytes after the declared payload");
  }
  Eigen::MatrixXd out(rows, dim);
  for (std::uint64_t k = 0; k < count; ++k) {
    const float v = std::bit_cast<float>(load_u32(payload.data() + 4 * k));
    if (!std::isfinite(v)) throw ValidationError("embedding file contains a non-finite value");
    out(static_cast<Eigen::Index>(k / dim), static_cast<Eigen::Index>(k % dim)) = v;
  }
  return out;
}

void write_embeddings_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  // Shortest decimal that parses back to the same f32.
  std::array<char, 64> buf{};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), to_storage(m(i, j)));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

void write_embeddings_binary(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::array<unsigned char, 16> header{};
  std::copy(kMagic.begin(), kMagic.end(), header.begin());
  store_u32(kEmbeddingFormatVersion, header.data() + 4);
  store_u32(checked_u32(m.rows(), "row count"), header.data() + 8);
  store_u32(checked_u32(m.cols(), "dimension"), header.data() + 12);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  std::array<unsigned char, 4> word{};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      store_u32(std::bit_cast<std::uint32_t>(to_storage(m(i, j))), word.data());
      out.write(reinterpret_cast<const char*>(word.data()), word.size());
    }
  }
}

Eigen::MatrixXd read_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return format == EmbeddingFormat::kCsv ? read_embeddings_csv(in)
                                           : read_embeddings_binary(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_embeddings(const std::filesystem::path& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& m, EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  if (format == EmbeddingFormat::kCsv) {
    write_embeddings_csv(out, m);
  } else {
    write_embeddings_binary(out, m);
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace clreg::cli
