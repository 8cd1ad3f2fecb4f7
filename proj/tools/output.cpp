#include "output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace trapscape::cli {

namespace fs = std::filesystem;

void Table::add(std::vector<Cell> row) {
  if (row.size() != columns.size()) throw std::logic_error("table row does not match its columns");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

nlohmann::json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json(nullptr);
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  return std::get<std::string>(c);
}

}  // namespace

OutputSet::OutputSet(fs::path dir, nlohmann::json header, Format format)
    : dir_(std::move(dir)), header_(std::move(header)), format_(format) {}

void OutputSet::table(const std::string& stem, const Table& t) {
  nlohmann::json header = header_;
  header["columns"] = t.columns;
  if (format_ == Format::csv) {
    std::string out = "# " + header.dump() + "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
      out += "\n";
    }
    staged_.emplace_back(stem + ".csv", std::move(out));
    return;
  }
  nlohmann::json j;
  j["header"] = header;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = cell_json(row[i]);
    j["rows"].push_back(std::move(r));
  }
  staged_.emplace_back(stem + ".json", j.dump(2) + "\n");
}

void OutputSet::report(const std::string& stem, nlohmann::json body) {
  nlohmann::json j;
  j["header"] = header_;
  for (auto& [k, v] : body.items()) j[k] = v;
  staged_.emplace_back(stem + ".json", j.dump(2) + "\n");
}

void OutputSet::commit() const {
  fs::create_directories(dir_);
  for (const auto& [name, text] : staged_) {
    const fs::path target = dir_ / name;
    const fs::path tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      out << text;
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
  }
}

std::vector<std::string> OutputSet::files() const {
  std::vector<std::string> out;
  for (const auto& [name, text] : staged_) out.push_back((dir_ / name).string());
  return out;
}

}  // namespace trapscape::cli
