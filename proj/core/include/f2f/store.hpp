#ifndef F2F_STORE_HPP
#define F2F_STORE_HPP

#include <cstddef>
#include <filesystem>
#include <string>

#include "f2f/embedding.hpp"

namespace f2f {

/**
 * F2FE binary embedding store, all integers and floats little-endian:
 *
 *   "F2FE"  u16 version  u32 dim  u64 record_count
 *   u32 subject_count  { u32 len, utf-8 bytes } * subject_count
 *   u32 image_count    { u32 len, utf-8 bytes } * image_count
 *   record_count * { u32 subject_index  u32 image_index  dim * f32 }
 *
 * Subject and image strings are deduplicated into their tables in
 * first-use order. Records keep their set order.
 */
inline constexpr std::uint16_t store_version = 1;

std::string encode_store(const EmbeddingSet& set);
/// Throws FormatError, CorruptFileError, DataValidationError or DuplicateRecordError.
EmbeddingSet decode_store(std::string_view bytes, const std::string& context = "store");

/// Atomic write (temp file then rename).
void write_store(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_store(const std::filesystem::path& path);

/**
 * CSV interchange: header "subject_id,image_id,v0,...,v{dim-1}" and one
 * record per line. Values are written in shortest round-trip form.
 * Throws CsvShapeError (with the line number) on ragged rows or a bad
 * header, DuplicateRecordError on repeated (subject, image).
 */
EmbeddingSet import_csv(const std::filesystem::path& path, std::size_t dim);
EmbeddingSet parse_csv(std::string_view text, std::size_t dim, const std::string& context = "csv");
void export_csv(const EmbeddingSet& set, const std::filesystem::path& path);
std::string format_csv(const EmbeddingSet& set);

}  // namespace f2f

#endif  // F2F_STORE_HPP
