#ifndef FEATMAP_DATASET_HPP
#define FEATMAP_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "featmap/types.hpp"

namespace featmap::io {

struct Dataset {
  RowMatrix values;
  std::optional<std::vector<Index>> labels;       // length m when present
  std::optional<std::vector<std::string>> names;  // length n when present

  Index size() const { return values.rows(); }
  Index dim() const { return values.cols(); }
};

enum class Format { csv, f32bin };

// Accepts "csv" and "f32bin".
Format parse_format(const std::string &name);

// CSV (RFC 4180 quoting, '.' decimal, optional auto-detected header row) or
// the binary layout: magic "FMAP", u32 version 1, u64 m, u64 n, then m*n
// little-endian f32 values row-major. label_column selects a column by
// header name or zero-based index and moves it into Dataset::labels.
Dataset load_matrix(const std::string &path, Format format,
                    const std::optional<std::string> &label_column = {});

// Values at 9 significant digits; labels, when given, append a final
// "label" column.
void write_csv(const std::string &path, const RowMatrix &values,
               const std::vector<std::string> &header,
               const std::vector<Index> *labels = nullptr);

void write_f32bin(const std::string &path, const RowMatrix &values);

} // namespace featmap::io

#endif
