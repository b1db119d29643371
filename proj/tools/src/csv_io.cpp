#include "csv_io.hpp"

#include <charconv>
#include <string_view>

#include "p2ot/errors.hpp"

namespace p2ot::cli {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim_line_end(const std::string& line) {
  std::string_view view(line);
  while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) view.remove_suffix(1);
  return view;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw_invalid_input(source + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_field(std::string_view field, const std::string& source, std::size_t line) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    fail(source, line, "cannot parse '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_line_end(line).empty()) continue;
    width = split_fields(trim_line_end(line)).size();
    break;
  }
  if (width == 0) throw_invalid_input(source + ": no header line");

  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim_line_end(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() != width) {
      fail(source, line_no,
           "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::string_view field : fields) data.push_back(parse_field<double>(field, source, line_no));
    ++rows;
  }
  if (rows == 0) throw_invalid_input(source + ": no data rows");

  Matrix out(static_cast<Index>(rows), static_cast<Index>(width));
  for (std::size_t i = 0; i < data.size(); ++i) out.data()[i] = data[i];
  return out;
}

std::string format_double(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

void write_matrix_csv(std::ostream& out, const Matrix& values) {
  for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << 'c' << j;
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

LabelColumns read_label_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  LabelColumns labels;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim_line_end(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() != 2) {
      fail(source, line_no, "expected 2 fields, found " + std::to_string(fields.size()));
    }
    if (!have_header) {
      have_header = true;
      continue;
    }
    labels.first.push_back(parse_field<int>(fields[0], source, line_no));
    labels.second.push_back(parse_field<int>(fields[1], source, line_no));
  }
  if (labels.first.empty()) throw_invalid_input(source + ": no label rows");
  return labels;
}

}  // namespace p2ot::cli
