#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pdc::io {

struct Axis {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

// Flat little-endian float64 grid, row-major, with a JSON sidecar holding
// shape, axes and units. Writes <stem>.bin and <stem>.json; returns both paths.
std::vector<std::filesystem::path> write_grid(const std::filesystem::path& stem,
                                              std::span<const double> data,
                                              const std::vector<std::size_t>& shape,
                                              const std::vector<Axis>& axes,
                                              const nlohmann::json& extra = nlohmann::json::object());

struct GridFile {
  std::vector<double> data;
  std::vector<std::size_t> shape;
  nlohmann::json sidecar;
};

// Throws IntegrityError if the payload size disagrees with the sidecar.
GridFile read_grid(const std::filesystem::path& stem);

// Fixed-precision CSV so that equal inputs give byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(int v);
  void end_row();
  void close();

 private:
  void sep();

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

std::string format_number(double v);

}  // namespace pdc::io
