#include "featmap/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <type_traits>

#include "featmap/errors.hpp"

namespace featmap::io {

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("read failure on " + path);
  return std::move(buf).str();
}

// Record splitter with RFC 4180 quote handling; CRLF and LF both end rows.
std::vector<CsvRecord> split_csv(const std::string &text,
                                 const std::string &path) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  current.line = 1;
  std::string field;
  bool in_quotes = false;
  bool any_char = false;  // the current record has content
  std::size_t line = 1;

  auto end_field = [&]() {
    current.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&]() {
    if (any_char || !current.fields.empty()) {
      end_field();
      records.push_back(std::move(current));
    }
    current = CsvRecord{};
    current.line = line;
    any_char = false;
  };

  for (std::size_t p = 0; p < text.size(); ++p) {
    const char c = text[p];
    if (in_quotes) {
      if (c == '"') {
        if (p + 1 < text.size() && text[p + 1] == '"') {
          field.push_back('"');
          ++p;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw DataError(path + ":" + std::to_string(line) +
                          ": quote inside unquoted field");
        }
        in_quotes = true;
        any_char = true;
        break;
      case ',':
        end_field();
        any_char = true;
        break;
      case '\r':
        break;  // swallowed; the following \n ends the record
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        any_char = true;
    }
  }
  if (in_quotes) throw DataError(path + ": unterminated quoted field");
  end_record();
  return records;
}

bool parse_value(const std::string &raw, Scalar &out) {
  std::size_t lo = 0, hi = raw.size();
  while (lo < hi && (raw[lo] == ' ' || raw[lo] == '\t')) ++lo;
  while (hi > lo && (raw[hi - 1] == ' ' || raw[hi - 1] == '\t')) --hi;
  if (lo == hi) return false;
  const auto result = std::from_chars(raw.data() + lo, raw.data() + hi, out);
  return result.ec == std::errc{} && result.ptr == raw.data() + hi;
}

// Resolves the label selector to a column index, by header name first.
Index resolve_label_column(const std::string &selector,
                           const std::vector<std::string> *names, Index n,
                           const std::string &path) {
  if (names != nullptr) {
    for (Index c = 0; c < n; ++c) {
      if ((*names)[c] == selector) return c;
    }
  }
  Index parsed = -1;
  const auto result = std::from_chars(
      selector.data(), selector.data() + selector.size(), parsed);
  if (result.ec != std::errc{} ||
      result.ptr != selector.data() + selector.size() || parsed < 0 ||
      parsed >= n) {
    throw ParameterError(path + ": label column '" + selector +
                         "' not found");
  }
  return parsed;
}

Dataset load_csv(const std::string &path,
                 const std::optional<std::string> &label_column) {
  const auto records = split_csv(read_file(path), path);
  if (records.empty()) throw DataError(path + ": empty file");

  const Index width = static_cast<Index>(records[0].fields.size());
  Scalar probe = 0.0;
  bool header = false;
  for (const auto &f : records[0].fields) {
    if (!parse_value(f, probe)) {
      header = true;
      break;
    }
  }
  std::optional<std::vector<std::string>> names;
  if (header) names = records[0].fields;

  const std::size_t first_data = header ? 1 : 0;
  if (records.size() <= first_data) throw DataError(path + ": no data rows");
  const Index m = static_cast<Index>(records.size() - first_data);

  Index label_col = -1;
  if (label_column) {
    label_col = resolve_label_column(
        *label_column, names ? &*names : nullptr, width, path);
  }
  const Index n = label_col >= 0 ? width - 1 : width;
  if (n < 1) throw DataError(path + ": no value columns");

  Dataset ds;
  ds.values.resize(m, n);
  if (label_col >= 0) ds.labels.emplace(m);
  for (Index r = 0; r < m; ++r) {
    const auto &rec = records[first_data + r];
    if (static_cast<Index>(rec.fields.size()) != width) {
      throw DataError(path + ":" + std::to_string(rec.line) + ": expected " +
                      std::to_string(width) + " fields, got " +
                      std::to_string(rec.fields.size()));
    }
    Index c_out = 0;
    for (Index c = 0; c < width; ++c) {
      Scalar v = 0.0;
      if (!parse_value(rec.fields[c], v)) {
        throw DataError(path + ":" + std::to_string(rec.line) +
                        ": cannot parse '" + rec.fields[c] + "' as a number");
      }
      if (c == label_col) {
        (*ds.labels)[r] = static_cast<Index>(std::llround(v));
      } else {
        ds.values(r, c_out++) = v;
      }
    }
  }
  if (!ds.values.allFinite()) {
    throw DataError(path + ": non-finite value in matrix");
  }
  if (names) {
    if (label_col >= 0) names->erase(names->begin() + label_col);
    ds.names = std::move(names);
  }
  return ds;
}

template <typename T>
T read_le(std::istream &in, const std::string &path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T))) {
    throw DataError(path + ": truncated header");
  }
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    acc |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  }
  T out;
  if constexpr (std::is_same_v<T, float>) {
    const std::uint32_t bits = static_cast<std::uint32_t>(acc);
    std::memcpy(&out, &bits, sizeof(out));
  } else {
    out = static_cast<T>(acc);
  }
  return out;
}

Dataset load_f32bin(const std::string &path,
                    const std::optional<std::string> &label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "FMAP", 4) != 0) {
    throw DataError(path + ": bad magic, expected FMAP");
  }
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != 1) {
    throw DataError(path + ": unsupported version " + std::to_string(version));
  }
  const auto m = read_le<std::uint64_t>(in, path);
  const auto n = read_le<std::uint64_t>(in, path);
  if (m == 0 || n == 0 || m > (1ull << 40) || n > (1ull << 40)) {
    throw DataError(path + ": implausible dimensions");
  }

  Dataset ds;
  ds.values.resize(static_cast<Index>(m), static_cast<Index>(n));
  std::vector<float> row(n);
  for (std::uint64_t r = 0; r < m; ++r) {
    if (!in.read(reinterpret_cast<char *>(row.data()),
                 static_cast<std::streamsize>(n * sizeof(float)))) {
      throw DataError(path + ": truncated payload at row " + std::to_string(r));
    }
    for (std::uint64_t c = 0; c < n; ++c) {
      ds.values(static_cast<Index>(r), static_cast<Index>(c)) = row[c];
    }
  }
  if (!ds.values.allFinite()) {
    throw DataError(path + ": non-finite value in matrix");
  }
  if (label_column) {
    const Index col = resolve_label_column(*label_column, nullptr,
                                           ds.values.cols(), path);
    std::vector<Index> labels(ds.values.rows());
    for (Index r = 0; r < ds.values.rows(); ++r) {
      labels[r] = static_cast<Index>(std::llround(ds.values(r, col)));
    }
    RowMatrix rest(ds.values.rows(), ds.values.cols() - 1);
    rest.leftCols(col) = ds.values.leftCols(col);
    rest.rightCols(rest.cols() - col) = ds.values.rightCols(
        ds.values.cols() - col - 1);
    ds.values = std::move(rest);
    ds.labels = std::move(labels);
    if (ds.values.cols() < 1) throw DataError(path + ": no value columns");
  }
  return ds;
}

std::string csv_escape(const std::string &field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

std::string format9(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

} // namespace

Format parse_format(const std::string &name) {
  if (name == "csv") return Format::csv;
  if (name == "f32bin") return Format::f32bin;
  throw ParameterError("unknown format '" + name + "', expected csv or f32bin");
}

Dataset load_matrix(const std::string &path, Format format,
                    const std::optional<std::string> &label_column) {
  return format == Format::csv ? load_csv(path, label_column)
                               : load_f32bin(path, label_column);
}

void write_csv(const std::string &path, const RowMatrix &values,
               const std::vector<std::string> &header,
               const std::vector<Index> *labels) {
  if (static_cast<Index>(header.size()) != values.cols()) {
    throw ParameterError("write_csv: header width mismatch");
  }
  if (labels != nullptr &&
      static_cast<Index>(labels->size()) != values.rows()) {
    throw ParameterError("write_csv: label count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (Index c = 0; c < values.cols(); ++c) {
    if (c > 0) out << ',';
    out << csv_escape(header[c]);
  }
  if (labels != nullptr) out << ",label";
  out << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << format9(values(r, c));
    }
    if (labels != nullptr) out << ',' << (*labels)[r];
    out << '\n';
  }
  if (!out) throw DataError("write failure on " + path);
}

void write_f32bin(const std::string &path, const RowMatrix &values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write("FMAP", 4);
  const std::uint32_t version = 1;
  const std::uint64_t m = static_cast<std::uint64_t>(values.rows());
  const std::uint64_t n = static_cast<std::uint64_t>(values.cols());
  // Header and payload are little-endian; this writer assumes a
  // little-endian host.
  out.write(reinterpret_cast<const char *>(&version), sizeof(version));
  out.write(reinterpret_cast<const char *>(&m), sizeof(m));
  out.write(reinterpret_cast<const char *>(&n), sizeof(n));
  std::vector<float> row(values.cols());
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      row[c] = static_cast<float>(values(r, c));
    }
    out.write(reinterpret_cast<const char *>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw DataError("write failure on " + path);
}

} // namespace featmap::io
