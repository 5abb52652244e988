#include <gtest/gtest.h>

#include <random>

#include "sheetguard/error.hpp"
#include "sheetguard/grid.hpp"
#include "support.hpp"

using namespace sheetguard;
using namespace sheetguard::test;

namespace {

Errc parse_error_of(std::string_view content) {
  try {
    parse_snapshot_file(content);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for:\n" << content;
  return Errc::BadConfig;
}

Snapshot random_snapshot(std::mt19937_64& rng, std::size_t max_cells) {
  static const char* kSheets[] = {"Sheet1", "Data", "My Sheet", "tab\\x"};
  static const char* kFormulas[] = {"=A1+1", "=SUM(A1:B9)", "=IF(A1>0,\"y\",\"n\")", "=Data!C3*2",
                                    "=((", "=B2&\"x\ty\""};
  Snapshot s;
  s.workbook_id = "wb-" + std::to_string(rng() % 100);
  s.timestamp = at("2024-01-01T00:00:00Z") + std::chrono::seconds(rng() % 1000000);
  s.actor = rng() % 2 ? "alice" : "bob smith";
  if (rng() % 3 == 0) s.attestation = "CHG-" + std::to_string(rng() % 999) + " reviewed\nok";
  std::size_t n = rng() % (max_cells + 1);
  for (std::size_t i = 0; i < n; ++i) {
    CellAddress a{kSheets[rng() % 4], static_cast<int>(rng() % 40 + 1), static_cast<int>(rng() % 20 + 1)};
    CellContent c;
    switch (rng() % 6) {
      case 0: c = num(std::ldexp(static_cast<double>(rng() % 100000) - 50000, -static_cast<int>(rng() % 10))); break;
      case 1: c = txt("t\\" + std::to_string(rng() % 50) + (rng() % 2 ? "\ttab" : "")); break;
      case 2: c = Literal{Boolean{rng() % 2 == 0}}; break;
      case 3: c = err(static_cast<ErrorCode>(rng() % 7)); break;
      case 4: c = fx(kFormulas[rng() % 6]); break;
      default: c = fx(kFormulas[rng() % 6], Number{static_cast<double>(rng() % 100)}); break;
    }
    s.cells.insert_or_assign(a, c);
  }
  return s;
}

}  // namespace

TEST(SnapshotFile, SingleNumberCell) {
  auto s = parse_snapshot_file("SNAP1\twb1\t2024-03-01T09:00:00Z\talice\nSheet1\tA1\tV\tN\t5\n");
  EXPECT_EQ(s.workbook_id, "wb1");
  EXPECT_EQ(s.actor, "alice");
  ASSERT_EQ(s.cells.size(), 1u);
  auto it = s.cells.find(addr("Sheet1!A1"));
  ASSERT_NE(it, s.cells.end());
  EXPECT_EQ(it->second, num(5));
}

TEST(SnapshotFile, HeaderOnlyIsEmptyWorkbook) {
  auto s = parse_snapshot_file("SNAP1\twb1\t2024-03-01T09:00:00Z\talice\n");
  EXPECT_TRUE(s.cells.empty());
  EXPECT_FALSE(s.attestation);
}

TEST(SnapshotFile, AllValueKindsAndAttestation) {
  auto s = parse_snapshot_file(
      "SNAP1\twb1\t2024-03-01T09:00:00Z\talice\n"
      "ATTEST\tCHG-12 approved\n"
      "Sheet1\tA1\tV\tT\thello world\n"
      "Sheet1\tA2\tV\tB\tTRUE\n"
      "Sheet1\tA3\tV\tE\t#DIV/0!\n"
      "Sheet1\tA4\tF\t=A1&\"!\"\n"
      "Sheet1\tA5\tF\t=A2\tB\tFALSE\n");
  EXPECT_EQ(s.attestation, "CHG-12 approved");
  EXPECT_EQ(s.cells.at(addr("Sheet1!A1")), txt("hello world"));
  EXPECT_EQ(s.cells.at(addr("Sheet1!A2")), CellContent(Literal{Boolean{true}}));
  EXPECT_EQ(s.cells.at(addr("Sheet1!A3")), err(ErrorCode::DivZero));
  const auto& f = std::get<Formula>(s.cells.at(addr("Sheet1!A4")));
  EXPECT_EQ(f.source, "=A1&\"!\"");
  EXPECT_TRUE(f.ast);
  EXPECT_FALSE(f.cached);
  const auto& g = std::get<Formula>(s.cells.at(addr("Sheet1!A5")));
  EXPECT_EQ(g.cached, CellValue(Boolean{false}));
}

TEST(SnapshotFile, UnparseableFormulaIsKept) {
  auto s = parse_snapshot_file("SNAP1\twb1\t2024-03-01T09:00:00Z\talice\nSheet1\tA1\tF\t=SUM(A1\n");
  const auto& f = std::get<Formula>(s.cells.at(addr("Sheet1!A1")));
  EXPECT_FALSE(f.ast);
  EXPECT_FALSE(f.parse_error.empty());
}

TEST(SnapshotFile, Errors) {
  const std::string h = "SNAP1\twb1\t2024-03-01T09:00:00Z\talice\n";
  EXPECT_EQ(parse_error_of("SNAP1\twb1\t2024-03-01T09:00:00Z\talice\nSheet1\tA1\tV\tN\t5\nsheet1\tA1\tV\tN\t6\n"),
            Errc::DuplicateCell);
  EXPECT_EQ(parse_error_of(""), Errc::MalformedHeader);
  EXPECT_EQ(parse_error_of("SNAP2\twb1\t2024-03-01T09:00:00Z\talice\n"), Errc::MalformedHeader);
  EXPECT_EQ(parse_error_of("SNAP1\twb1\t2024-03-01T09:00:00Z\n"), Errc::MalformedHeader);
  EXPECT_EQ(parse_error_of("SNAP1\twb1\tyesterday\talice\n"), Errc::BadTimestamp);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA0\tV\tN\t5\n"), Errc::BadAddress);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tZZZZ1\tV\tN\t5\n"), Errc::BadAddress);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA1\tV\tN\tfive\n"), Errc::BadValue);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA1\tV\tB\tyes\n"), Errc::BadValue);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA1\tV\tE\t#OOPS!\n"), Errc::BadValue);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA1\tX\t5\n"), Errc::BadValue);
  EXPECT_EQ(parse_error_of(h + "Sheet1\tA1\tF\tA1+1\n"), Errc::BadValue);
}

TEST(SnapshotFile, WriteSortsCells) {
  auto s = snap("wb1", "2024-03-01T09:00:00Z", "alice", {{"Sheet1!B2", num(2)}, {"Sheet1!A1", num(1)}});
  auto text = write_snapshot_file(s);
  EXPECT_EQ(text,
            "SNAP1\twb1\t2024-03-01T09:00:00Z\talice\n"
            "Sheet1\tA1\tV\tN\t1\n"
            "Sheet1\tB2\tV\tN\t2\n");
}

TEST(SnapshotFile, WriteEmptyIsHeaderOnly) {
  auto s = snap("wb1", "2024-03-01T09:00:00Z", "alice");
  EXPECT_EQ(write_snapshot_file(s), "SNAP1\twb1\t2024-03-01T09:00:00Z\talice\n");
}

TEST(SnapshotFile, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    auto s = random_snapshot(rng, 60);
    auto text = write_snapshot_file(s);
    auto back = parse_snapshot_file(text);
    ASSERT_EQ(back, s) << text;
    ASSERT_EQ(write_snapshot_file(back), text);
  }
}

TEST(SnapshotDigest, EmptyWorkbookIsPinned) {
  // Independent SHA-256 of "SNAP1\twb1\n".
  auto s = snap("wb1", "2024-03-01T09:00:00Z", "alice");
  EXPECT_EQ(snapshot_digest(s).hex, "374e6be4dfd7539b2222f4666ab86636bf215bf7cc002594f5b9c15229774496");
}

TEST(SnapshotDigest, SingleValueChangeIsPinned) {
  auto five = snap("wb1", "2024-03-01T09:00:00Z", "alice", {{"Sheet1!A1", num(5)}});
  auto six = snap("wb1", "2024-03-01T09:00:00Z", "alice", {{"Sheet1!A1", num(6)}});
  EXPECT_EQ(snapshot_digest(five).hex, "b347bdf5942320d7822ec3757ee9a4dd49b9628da78ce51dabf942ceaea33173");
  EXPECT_EQ(snapshot_digest(six).hex, "9711e6879d7c3808549bfd2dd621b440b82e1a6ee437b6df70316b01d7c3d8e9");
}

TEST(SnapshotDigest, IgnoresActorTimestampAndAttestation) {
  auto a = snap("wb1", "2024-03-01T09:00:00Z", "alice", {{"Sheet1!A1", num(5)}});
  auto b = snap("wb1", "2025-01-01T00:00:00Z", "bob", {{"Sheet1!A1", num(5)}});
  b.attestation = "signed";
  EXPECT_EQ(snapshot_digest(a), snapshot_digest(b));
}

TEST(SnapshotDigest, StabilityProperty) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    auto s = random_snapshot(rng, 40);
    if (s.cells.empty()) continue;
    auto d = snapshot_digest(s);

    // Insertion order cannot matter: rebuild the map in reverse.
    Snapshot r = s;
    r.cells.clear();
    for (auto it = s.cells.rbegin(); it != s.cells.rend(); ++it) r.cells.emplace(it->first, it->second);
    r.actor = "someone else";
    r.timestamp += std::chrono::hours(5);
    ASSERT_EQ(snapshot_digest(r), d);

    // Any single-cell change moves the digest.
    Snapshot m = s;
    auto it = std::next(m.cells.begin(), static_cast<long>(rng() % m.cells.size()));
    it->second = txt("changed-" + std::to_string(i));
    ASSERT_NE(snapshot_digest(m), d);

    Snapshot removed = s;
    removed.cells.erase(removed.cells.begin());
    ASSERT_NE(snapshot_digest(removed), d);
  }
}

TEST(CellContent, EncodeDecode) {
  EXPECT_EQ(encode_content(num(5)), "V\tN\t5");
  EXPECT_EQ(encode_content(fx("=A1+1", Number{6})), "F\t=A1+1\tN\t6");
  EXPECT_EQ(decode_content("F\t=A1+1\tN\t6"), fx("=A1+1", Number{6}));
  EXPECT_FALSE(decode_content("Q\t1"));
  EXPECT_EQ(describe(num(5)), "5");
  EXPECT_EQ(describe(fx("=A1+1", Number{3})), "=A1+1 [3]");
}
