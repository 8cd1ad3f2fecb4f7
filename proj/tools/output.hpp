#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace trapscape::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

enum class Format { csv, json };

/// Artifacts are staged in memory and written only by commit(), so a failed
/// run leaves no partial outputs.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, nlohmann::json header, Format format);

  /// Curve or grid: `<stem>.csv` or `<stem>.json` depending on the format.
  void table(const std::string& stem, const Table& t);
  /// Report: always `<stem>.json`, with the header under "header".
  void report(const std::string& stem, nlohmann::json body);

  void commit() const;
  std::vector<std::string> files() const;

 private:
  std::filesystem::path dir_;
  nlohmann::json header_;
  Format format_;
  std::vector<std::pair<std::string, std::string>> staged_;
};

/// Shortest round-trip decimal representation; "nan"/"inf" for non-finite values.
std::string format_number(double v);

}  // namespace trapscape::cli
