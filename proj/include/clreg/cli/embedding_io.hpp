#pragma once

// Embedding files. Both formats hold 32-bit floats; values are widened to
// double on read.
//
//   csv  one embedding per line, comma-separated decimals
//   bin  "CLRG", u32 version (1), u32 rows, u32 dim, rows*dim f32, all
//        little-endian, row-major

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

#include <Eigen/Dense>

namespace clreg::cli {

enum class EmbeddingFormat { kCsv, kBinary };

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

EmbeddingFormat parse_embedding_format(std::string_view s);
std::string_view to_string(EmbeddingFormat f);

Eigen::MatrixXd read_embeddings_csv(std::istream& in);
Eigen::MatrixXd read_embeddings_binary(std::istream& in);
void write_embeddings_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m);
void write_embeddings_binary(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m);

Eigen::MatrixXd read_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void write_embeddings(const std::filesystem::path& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& m, EmbeddingFormat format);

}  // namespace clreg::cli
