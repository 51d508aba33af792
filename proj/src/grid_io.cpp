#include "pdc/grid_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <fmt/format.h>

#include "pdc/errors.hpp"

namespace pdc::io {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return __builtin_bswap64(v);
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* ext) {
  return stem.string() + ext;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", v);
}

std::vector<std::filesystem::path> write_grid(const std::filesystem::path& stem,
                                              std::span<const double> data,
                                              const std::vector<std::size_t>& shape,
                                              const std::vector<Axis>& axes,
                                              const nlohmann::json& extra) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (n != data.size()) {
    throw IntegrityError(fmt::format("grid '{}' has {} values for shape of {}", stem.string(), data.size(), n));
  }
  if (axes.size() != shape.size()) {
    throw IntegrityError(fmt::format("grid '{}' needs one axis per dimension", stem.string()));
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].values.size() != shape[i]) {
      throw IntegrityError(fmt::format("axis '{}' has {} values for extent {}", axes[i].name,
                                       axes[i].values.size(), shape[i]));
    }
  }
  const auto bin = with_suffix(stem, ".bin");
  {
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", bin.string()));
    std::vector<std::uint64_t> buf(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) buf[i] = to_little(std::bit_cast<std::uint64_t>(data[i]));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!out) throw Error(fmt::format("short write to '{}'", bin.string()));
  }
  nlohmann::json side = extra;
  side["file"] = bin.filename().string();
  side["dtype"] = "float64";
  side["byte_order"] = "little";
  side["order"] = "row-major";
  side["shape"] = shape;
  side["axes"] = nlohmann::json::array();
  for (const auto& a : axes) side["axes"].push_back({{"name", a.name}, {"unit", a.unit}, {"values", a.values}});
  const auto js = with_suffix(stem, ".json");
  {
    std::ofstream out(js);
    if (!out) throw Error(fmt::format("cannot write '{}'", js.string()));
    out << side.dump(1) << '\n';
  }
  return {bin, js};
}

GridFile read_grid(const std::filesystem::path& stem) {
  GridFile g;
  const auto js = with_suffix(stem, ".json");
  std::ifstream sj(js);
  if (!sj) throw Error(fmt::format("cannot read '{}'", js.string()));
  g.sidecar = nlohmann::json::parse(sj);
  if (g.sidecar.value("dtype", "") != "float64" || g.sidecar.value("byte_order", "") != "little") {
    throw IntegrityError(fmt::format("'{}' is not a little-endian float64 grid", js.string()));
  }
  g.shape = g.sidecar.at("shape").get<std::vector<std::size_t>>();
  const std::size_t n = std::accumulate(g.shape.begin(), g.shape.end(), std::size_t{1}, std::multiplies<>());
  const auto bin = with_suffix(stem, ".bin");
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(bin, ec);
  if (ec || bytes != n * 8) {
    throw IntegrityError(fmt::format("'{}' holds {} bytes, sidecar expects {}", bin.string(), ec ? 0 : bytes, n * 8));
  }
  std::ifstream in(bin, std::ios::binary);
  std::vector<std::uint64_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 8));
  g.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.data[i] = std::bit_cast<double>(to_little(buf[i]));
  return g;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : path_(path), out_(path), columns_(columns.size()) {
  if (!out_) throw Error(fmt::format("cannot write '{}'", path.string()));
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::sep() {
  if (in_row_ == columns_) throw IntegrityError(fmt::format("{}: too many cells in row", path_.string()));
  if (in_row_++ > 0) out_ << ',';
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ << format_number(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::cell(int v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw IntegrityError(fmt::format("{}: row has {} of {} cells", path_.string(), in_row_, columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw Error(fmt::format("short write to '{}'", path_.string()));
}

}  // namespace pdc::io
