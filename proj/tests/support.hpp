#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "sheetguard/address.hpp"
#include "sheetguard/grid.hpp"
#include "sheetguard/instant.hpp"

namespace sheetguard::test {

inline Instant at(std::string_view text) {
  auto t = parse_instant(text);
  if (!t) throw std::invalid_argument("bad instant in test: " + std::string(text));
  return *t;
}

inline CellAddress addr(std::string_view text) {
  auto a = parse_qualified_address(text);
  if (!a) throw std::invalid_argument("bad address in test: " + std::string(text));
  return *a;
}

inline Region region(std::string_view text) {
  auto r = parse_region(text);
  if (!r) throw std::invalid_argument("bad region in test: " + std::string(text));
  return *r;
}

inline CellContent num(double v) { return Literal{Number{v}}; }
inline CellContent txt(std::string v) { return Literal{Text{std::move(v)}}; }
inline CellContent err(ErrorCode c) { return Literal{ErrorValue{c}}; }
inline CellContent fx(std::string src) { return Formula::from_source(std::move(src)); }
inline CellContent fx(std::string src, CellValue cached) {
  return Formula::from_source(std::move(src), std::move(cached));
}

inline Snapshot snap(std::string wb, std::string_view ts, std::string actor,
                     std::initializer_list<std::pair<std::string_view, CellContent>> cells = {}) {
  Snapshot s;
  s.workbook_id = std::move(wb);
  s.timestamp = at(ts);
  s.actor = std::move(actor);
  for (const auto& [a, c] : cells) s.cells.insert_or_assign(addr(a), c);
  return s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sheetguard-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace sheetguard::test
