#include "texplain/feature_table.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "texplain/dataset.hpp"
#include "texplain/error.hpp"

namespace texplain {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw SchemaError("not a number: '" + s + "'");
  }
  return value;
}

void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text) {
  std::filesystem::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  const std::filesystem::path tmp =
      dir / (path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path,
                       const FeatureTable& table) {
  std::string text;
  text += "case_id,label";
  for (const auto& name : table.feature_names) {
    text += ',';
    text += name;
  }
  text += '\n';
  for (std::size_t i = 0; i < table.num_cases(); ++i) {
    text += table.case_ids[i];
    text += ',';
    text += label_name(static_cast<Label>(table.labels[i]));
    for (double v : table.rows[i]) {
      text += ',';
      text += format_double(v);
    }
    text += '\n';
  }
  atomic_write_file(path, text);
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature CSV: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty feature CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "case_id" || header[1] != "label") {
    throw SchemaError("feature CSV header must start with case_id,label");
  }

  FeatureTable table;
  table.feature_names.assign(header.begin() + 2, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw SchemaError("feature CSV line " + std::to_string(line_no) +
                        " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    table.case_ids.push_back(fields[0]);
    try {
      table.labels.push_back(static_cast<int>(label_from_name(fields[1])));
    } catch (const std::invalid_argument& e) {
      throw SchemaError("feature CSV line " + std::to_string(line_no) +
                        ": " + e.what());
    }
    std::vector<double> row;
    row.reserve(table.feature_names.size());
    for (std::size_t f = 2; f < fields.size(); ++f) {
      row.push_back(parse_double(fields[f]));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace texplain
