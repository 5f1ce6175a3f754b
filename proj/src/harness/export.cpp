#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"

namespace bmp::harness {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string cell_text(const nlohmann::json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_number_float()) return format_number(cell.get<double>());
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_null()) return "";
  return cell.dump();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += cell_text(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string canonical_json(const nlohmann::json& value) { return value.dump(2) + "\n"; }

nlohmann::json to_json(const Estimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"replicas", e.replicas}, {"capped", e.capped}};
}

nlohmann::json bundle_json(const ResultBundle& bundle) {
  nlohmann::json tables = nlohmann::json::object();
  for (const Table& t : bundle.tables) tables[t.name] = {{"header", t.header}, {"rows", t.rows}};
  return {{"command", bundle.command}, {"summary", bundle.summary}, {"tables", tables}};
}

std::vector<std::filesystem::path> export_results(const ResultBundle& bundle, const std::filesystem::path& dir,
                                                  const std::string& format) {
  if (format != "csv" && format != "json") throw ValidationError("export: format must be csv or json");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  if (format == "csv") {
    for (const Table& t : bundle.tables) {
      written.push_back(dir / (t.name + ".csv"));
      write_file(written.back(), to_csv(t));
    }
    written.push_back(dir / "summary.json");
    write_file(written.back(), canonical_json(bundle.summary));
  } else {
    written.push_back(dir / "bundle.json");
    write_file(written.back(), canonical_json(bundle_json(bundle)));
  }
  written.push_back(dir / "metadata.json");
  write_file(written.back(), canonical_json(bundle.metadata));
  return written;
}

}  // namespace bmp::harness
